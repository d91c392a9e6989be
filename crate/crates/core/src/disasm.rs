// SPDX-License-Identifier: Apache-2.0

//! Linear-sweep EVM disassembler over the Shanghai opcode table.
//!
//! Every byte of the input is consumed exactly once. Bytes that are not
//! defined opcodes decode as `INVALID` (keeping their raw byte value), and a
//! `PUSHn` whose immediate runs past the end of the code keeps the bytes that
//! are present and is flagged `truncated`.

use std::fmt;

use primitive_types::U256;

/// Static description of one opcode byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Opcode {
    pub byte: u8,
    pub name: &'static str,
    pub stack_in: u8,
    pub stack_out: u8,
    pub immediate_len: u8,
}

impl Opcode {
    /// True when the byte is a real opcode of the table (the designated
    /// `INVALID` 0xFE counts as defined).
    pub fn is_defined(&self) -> bool {
        TABLE[self.byte as usize].is_some()
    }

    pub fn is_push(&self) -> bool {
        (0x5f..=0x7f).contains(&self.byte)
    }

    pub fn is_dup(&self) -> bool {
        (0x80..=0x8f).contains(&self.byte)
    }

    pub fn is_swap(&self) -> bool {
        (0x90..=0x9f).contains(&self.byte)
    }

    /// POP, PUSH*, DUP* and SWAP*: these only shuffle the operand stack.
    pub fn is_stack_manipulation(&self) -> bool {
        self.byte == 0x50 || self.is_push() || self.is_dup() || self.is_swap()
    }

    pub fn is_jump(&self) -> bool {
        self.byte == 0x56
    }

    pub fn is_jumpi(&self) -> bool {
        self.byte == 0x57
    }

    pub fn is_jumpdest(&self) -> bool {
        self.byte == 0x5b
    }

    /// Opcodes after which execution never continues to the next pc.
    pub fn is_halt(&self) -> bool {
        matches!(self.byte, 0x00 | 0xf3 | 0xfd | 0xfe | 0xff) || !self.is_defined()
    }

    /// Opcodes that end a basic block.
    pub fn ends_block(&self) -> bool {
        self.is_jump() || self.is_jumpi() || self.is_halt()
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

const fn op(byte: u8, name: &'static str, stack_in: u8, stack_out: u8) -> Option<Opcode> {
    Some(Opcode { byte, name, stack_in, stack_out, immediate_len: 0 })
}

const PUSH_NAMES: [&str; 33] = [
    "PUSH0", "PUSH1", "PUSH2", "PUSH3", "PUSH4", "PUSH5", "PUSH6", "PUSH7", "PUSH8", "PUSH9",
    "PUSH10", "PUSH11", "PUSH12", "PUSH13", "PUSH14", "PUSH15", "PUSH16", "PUSH17", "PUSH18",
    "PUSH19", "PUSH20", "PUSH21", "PUSH22", "PUSH23", "PUSH24", "PUSH25", "PUSH26", "PUSH27",
    "PUSH28", "PUSH29", "PUSH30", "PUSH31", "PUSH32",
];
const DUP_NAMES: [&str; 16] = [
    "DUP1", "DUP2", "DUP3", "DUP4", "DUP5", "DUP6", "DUP7", "DUP8", "DUP9", "DUP10", "DUP11",
    "DUP12", "DUP13", "DUP14", "DUP15", "DUP16",
];
const SWAP_NAMES: [&str; 16] = [
    "SWAP1", "SWAP2", "SWAP3", "SWAP4", "SWAP5", "SWAP6", "SWAP7", "SWAP8", "SWAP9", "SWAP10",
    "SWAP11", "SWAP12", "SWAP13", "SWAP14", "SWAP15", "SWAP16",
];
const LOG_NAMES: [&str; 5] = ["LOG0", "LOG1", "LOG2", "LOG3", "LOG4"];

const fn build_table() -> [Option<Opcode>; 256] {
    let mut t: [Option<Opcode>; 256] = [None; 256];
    t[0x00] = op(0x00, "STOP", 0, 0);
    t[0x01] = op(0x01, "ADD", 2, 1);
    t[0x02] = op(0x02, "MUL", 2, 1);
    t[0x03] = op(0x03, "SUB", 2, 1);
    t[0x04] = op(0x04, "DIV", 2, 1);
    t[0x05] = op(0x05, "SDIV", 2, 1);
    t[0x06] = op(0x06, "MOD", 2, 1);
    t[0x07] = op(0x07, "SMOD", 2, 1);
    t[0x08] = op(0x08, "ADDMOD", 3, 1);
    t[0x09] = op(0x09, "MULMOD", 3, 1);
    t[0x0a] = op(0x0a, "EXP", 2, 1);
    t[0x0b] = op(0x0b, "SIGNEXTEND", 2, 1);
    t[0x10] = op(0x10, "LT", 2, 1);
    t[0x11] = op(0x11, "GT", 2, 1);
    t[0x12] = op(0x12, "SLT", 2, 1);
    t[0x13] = op(0x13, "SGT", 2, 1);
    t[0x14] = op(0x14, "EQ", 2, 1);
    t[0x15] = op(0x15, "ISZERO", 1, 1);
    t[0x16] = op(0x16, "AND", 2, 1);
    t[0x17] = op(0x17, "OR", 2, 1);
    t[0x18] = op(0x18, "XOR", 2, 1);
    t[0x19] = op(0x19, "NOT", 1, 1);
    t[0x1a] = op(0x1a, "BYTE", 2, 1);
    t[0x1b] = op(0x1b, "SHL", 2, 1);
    t[0x1c] = op(0x1c, "SHR", 2, 1);
    t[0x1d] = op(0x1d, "SAR", 2, 1);
    t[0x20] = op(0x20, "KECCAK256", 2, 1);
    t[0x30] = op(0x30, "ADDRESS", 0, 1);
    t[0x31] = op(0x31, "BALANCE", 1, 1);
    t[0x32] = op(0x32, "ORIGIN", 0, 1);
    t[0x33] = op(0x33, "CALLER", 0, 1);
    t[0x34] = op(0x34, "CALLVALUE", 0, 1);
    t[0x35] = op(0x35, "CALLDATALOAD", 1, 1);
    t[0x36] = op(0x36, "CALLDATASIZE", 0, 1);
    t[0x37] = op(0x37, "CALLDATACOPY", 3, 0);
    t[0x38] = op(0x38, "CODESIZE", 0, 1);
    t[0x39] = op(0x39, "CODECOPY", 3, 0);
    t[0x3a] = op(0x3a, "GASPRICE", 0, 1);
    t[0x3b] = op(0x3b, "EXTCODESIZE", 1, 1);
    t[0x3c] = op(0x3c, "EXTCODECOPY", 4, 0);
    t[0x3d] = op(0x3d, "RETURNDATASIZE", 0, 1);
    t[0x3e] = op(0x3e, "RETURNDATACOPY", 3, 0);
    t[0x3f] = op(0x3f, "EXTCODEHASH", 1, 1);
    t[0x40] = op(0x40, "BLOCKHASH", 1, 1);
    t[0x41] = op(0x41, "COINBASE", 0, 1);
    t[0x42] = op(0x42, "TIMESTAMP", 0, 1);
    t[0x43] = op(0x43, "NUMBER", 0, 1);
    t[0x44] = op(0x44, "PREVRANDAO", 0, 1);
    t[0x45] = op(0x45, "GASLIMIT", 0, 1);
    t[0x46] = op(0x46, "CHAINID", 0, 1);
    t[0x47] = op(0x47, "SELFBALANCE", 0, 1);
    t[0x48] = op(0x48, "BASEFEE", 0, 1);
    t[0x50] = op(0x50, "POP", 1, 0);
    t[0x51] = op(0x51, "MLOAD", 1, 1);
    t[0x52] = op(0x52, "MSTORE", 2, 0);
    t[0x53] = op(0x53, "MSTORE8", 2, 0);
    t[0x54] = op(0x54, "SLOAD", 1, 1);
    t[0x55] = op(0x55, "SSTORE", 2, 0);
    t[0x56] = op(0x56, "JUMP", 1, 0);
    t[0x57] = op(0x57, "JUMPI", 2, 0);
    t[0x58] = op(0x58, "PC", 0, 1);
    t[0x59] = op(0x59, "MSIZE", 0, 1);
    t[0x5a] = op(0x5a, "GAS", 0, 1);
    t[0x5b] = op(0x5b, "JUMPDEST", 0, 0);
    let mut i = 0;
    while i < 33 {
        let byte = 0x5f + i as u8;
        t[byte as usize] = Some(Opcode {
            byte,
            name: PUSH_NAMES[i],
            stack_in: 0,
            stack_out: 1,
            immediate_len: i as u8,
        });
        i += 1;
    }
    let mut i = 0;
    while i < 16 {
        let n = i as u8 + 1;
        t[0x80 + i] = op(0x80 + i as u8, DUP_NAMES[i], n, n + 1);
        t[0x90 + i] = op(0x90 + i as u8, SWAP_NAMES[i], n + 1, n + 1);
        i += 1;
    }
    let mut i = 0;
    while i < 5 {
        t[0xa0 + i] = op(0xa0 + i as u8, LOG_NAMES[i], i as u8 + 2, 0);
        i += 1;
    }
    t[0xf0] = op(0xf0, "CREATE", 3, 1);
    t[0xf1] = op(0xf1, "CALL", 7, 1);
    t[0xf2] = op(0xf2, "CALLCODE", 7, 1);
    t[0xf3] = op(0xf3, "RETURN", 2, 0);
    t[0xf4] = op(0xf4, "DELEGATECALL", 6, 1);
    t[0xf5] = op(0xf5, "CREATE2", 4, 1);
    t[0xfa] = op(0xfa, "STATICCALL", 6, 1);
    t[0xfd] = op(0xfd, "REVERT", 2, 0);
    t[0xfe] = op(0xfe, "INVALID", 0, 0);
    t[0xff] = op(0xff, "SELFDESTRUCT", 1, 0);
    t
}

static TABLE: [Option<Opcode>; 256] = build_table();

/// Looks up an opcode byte. Undefined bytes map to `INVALID` with the raw
/// byte preserved.
pub fn opcode_info(byte: u8) -> Opcode {
    TABLE[byte as usize].unwrap_or(Opcode {
        byte,
        name: "INVALID",
        stack_in: 0,
        stack_out: 0,
        immediate_len: 0,
    })
}

/// Every defined opcode in byte order.
pub fn defined_opcodes() -> impl Iterator<Item = Opcode> {
    TABLE.iter().filter_map(|o| *o)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub pc: u64,
    pub opcode: Opcode,
    /// Immediate bytes actually present in the code. Shorter than
    /// `opcode.immediate_len` only when `truncated` is set.
    pub immediate: Option<Vec<u8>>,
    pub truncated: bool,
}

impl Instruction {
    /// Number of code bytes this instruction occupies.
    pub fn encoded_len(&self) -> usize {
        1 + self.immediate.as_ref().map_or(0, Vec::len)
    }

    /// Value pushed by a PUSH instruction; missing trailing bytes read as zero.
    pub fn push_value(&self) -> Option<U256> {
        if !self.opcode.is_push() {
            return None;
        }
        let width = self.opcode.immediate_len as usize;
        let mut buf = [0u8; 32];
        if let Some(imm) = &self.immediate {
            buf[32 - width..32 - width + imm.len()].copy_from_slice(imm);
        }
        Some(U256::from_big_endian(&buf))
    }

    pub fn next_pc(&self) -> u64 {
        self.pc + self.encoded_len() as u64
    }

    /// Appends the original encoding of this instruction.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.opcode.byte);
        if let Some(imm) = &self.immediate {
            out.extend_from_slice(imm);
        }
    }
}

impl fmt::Display for Instruction {
    /// `PC: MNEMONIC [0xIMM]`, pc in lowercase hex.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02x}: {}", self.pc, self.opcode.name)?;
        if let Some(imm) = &self.immediate {
            if imm.is_empty() {
                f.write_str(" 0x00")?;
            } else {
                write!(f, " 0x{}", hex::encode(imm))?;
            }
        }
        if self.truncated {
            f.write_str(" (truncated)")?;
        }
        Ok(())
    }
}

/// Decodes `code` into an instruction stream. Total over arbitrary bytes.
pub fn disassemble(code: &[u8]) -> Vec<Instruction> {
    let mut out = Vec::new();
    let mut pc = 0usize;
    while pc < code.len() {
        let opcode = opcode_info(code[pc]);
        let width = opcode.immediate_len as usize;
        let (immediate, truncated) = if opcode.is_push() && width > 0 {
            let start = pc + 1;
            let end = (start + width).min(code.len());
            (Some(code[start..end].to_vec()), end - start < width)
        } else {
            (None, false)
        };
        let insn = Instruction { pc: pc as u64, opcode, immediate, truncated };
        pc += insn.encoded_len();
        out.push(insn);
    }
    out
}

/// Re-encodes an instruction stream.
pub fn assemble(instructions: &[Instruction]) -> Vec<u8> {
    let mut out = Vec::new();
    for insn in instructions {
        insn.encode_into(&mut out);
    }
    out
}

/// One instruction per line in `PC: MNEMONIC [0xIMM]` form.
pub fn dump(instructions: &[Instruction]) -> String {
    let mut s = String::new();
    for insn in instructions {
        s.push_str(&insn.to_string());
        s.push('\n');
    }
    s
}
