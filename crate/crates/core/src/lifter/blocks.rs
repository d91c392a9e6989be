// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;

use crate::disasm::Instruction;

/// How control leaves a block, before jump targets are known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockExit {
    Jump,
    JumpI,
    /// Block ends because the next instruction is a JUMPDEST.
    Fallthrough,
    /// Halting opcode, or the end of the code.
    Halt,
}

/// A basic block before lifting: a range of the instruction stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSkeleton {
    pub entry_pc: u64,
    /// Indices into the instruction stream.
    pub range: Range<usize>,
    pub exit: BlockExit,
}

/// Partitions an instruction stream into basic blocks. A block starts at
/// every JUMPDEST and after every JUMP, JUMPI or halting opcode.
pub fn split_blocks(instructions: &[Instruction]) -> Vec<BlockSkeleton> {
    let mut blocks = Vec::new();
    let mut start = 0usize;
    for (i, insn) in instructions.iter().enumerate() {
        if insn.opcode.is_jumpdest() && i > start {
            blocks.push(BlockSkeleton {
                entry_pc: instructions[start].pc,
                range: start..i,
                exit: BlockExit::Fallthrough,
            });
            start = i;
        }
        if insn.opcode.ends_block() {
            let exit = if insn.opcode.is_jump() {
                BlockExit::Jump
            } else if insn.opcode.is_jumpi() {
                BlockExit::JumpI
            } else {
                BlockExit::Halt
            };
            blocks.push(BlockSkeleton { entry_pc: instructions[start].pc, range: start..i + 1, exit });
            start = i + 1;
        }
    }
    if start < instructions.len() {
        // running off the end of the code halts
        blocks.push(BlockSkeleton {
            entry_pc: instructions[start].pc,
            range: start..instructions.len(),
            exit: BlockExit::Halt,
        });
    }
    blocks
}
