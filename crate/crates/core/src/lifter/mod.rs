// SPDX-License-Identifier: Apache-2.0

//! Stack-to-register lifting.
//!
//! Each instruction that pushes a value defines exactly one register; the
//! register id is fixed by the instruction's position (V1, V2, ... in pc
//! order), so the lifted form is single-assignment by construction. Operands
//! are listed in stack layout: deepest slot first, top of stack last.

mod blocks;
mod fold;
mod resolve;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use primitive_types::U256;

use crate::disasm::{disassemble, Instruction};

pub use blocks::{split_blocks, BlockExit, BlockSkeleton};
pub use fold::{eval_op, fold_constants, is_foldable, ConstEnv, ConstSet, MAX_CONST_SET};
pub use resolve::{resolve_jumps, JumpAnalysis, JumpTarget, FIXPOINT_PASS_CAP};

/// EVM operand stack limit.
pub const MAX_STACK_DEPTH: usize = 1024;

/// Maximum number of reaching definitions a merged stack slot keeps before
/// it collapses to `Unknown`.
pub const MAX_SLOT_DEFS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegId(pub u32);

impl fmt::Display for RegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

/// An RTL operand, or an abstract stack slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Const(U256),
    Reg(RegId),
    /// Several reaching definitions merged at a block entry (sorted, deduped).
    Phi(Vec<RegId>),
    Unknown,
}

impl Value {
    /// Registers this operand may read.
    pub fn regs(&self) -> &[RegId] {
        match self {
            Value::Reg(r) => std::slice::from_ref(r),
            Value::Phi(rs) => rs,
            _ => &[],
        }
    }

    fn join(&self, other: &Value) -> Value {
        if self == other {
            return self.clone();
        }
        match (self, other) {
            (Value::Unknown, _) | (_, Value::Unknown) => Value::Unknown,
            (Value::Const(_), _) | (_, Value::Const(_)) => Value::Unknown,
            _ => {
                let set: BTreeSet<RegId> = self.regs().iter().chain(other.regs()).copied().collect();
                if set.len() > MAX_SLOT_DEFS {
                    Value::Unknown
                } else {
                    Value::Phi(set.into_iter().collect())
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(c) => write!(f, "{c:#x}"),
            Value::Reg(r) => write!(f, "{r}"),
            Value::Phi(rs) => {
                f.write_str("{")?;
                for (i, r) in rs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{r}")?;
                }
                f.write_str("}")
            }
            Value::Unknown => f.write_str("?"),
        }
    }
}

/// One single-assignment statement. `op` is an EVM mnemonic or `CONST`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlStatement {
    pub pc: u64,
    pub def: Option<RegId>,
    pub op: &'static str,
    pub args: Vec<Value>,
}

impl RtlStatement {
    /// Registers read by this statement, deduplicated, in first-use order.
    pub fn uses(&self) -> Vec<RegId> {
        let mut out: Vec<RegId> = Vec::new();
        for r in self.args.iter().flat_map(Value::regs) {
            if !out.contains(r) {
                out.push(*r);
            }
        }
        out
    }
}

impl fmt::Display for RtlStatement {
    /// `PC: Vk = OP args`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02x}: ", self.pc)?;
        if let Some(d) = self.def {
            write!(f, "{d} = ")?;
        }
        f.write_str(self.op)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

/// Abstract operand stack; the top is the last slot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbstractStack {
    pub slots: Vec<Value>,
    pub overflow: bool,
}

impl AbstractStack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slots(slots: Vec<Value>) -> Self {
        AbstractStack { slots, overflow: false }
    }

    pub fn depth(&self) -> usize {
        self.slots.len()
    }

    fn push(&mut self, v: Value) {
        self.slots.push(v);
        if self.slots.len() > MAX_STACK_DEPTH {
            self.slots.remove(0);
            self.overflow = true;
        }
    }

    /// Pads the bottom with `Unknown` so at least `n` slots exist. Returns
    /// true if padding was needed (an underflow).
    fn ensure_depth(&mut self, n: usize) -> bool {
        let have = self.slots.len();
        if have >= n {
            return false;
        }
        let mut padded = vec![Value::Unknown; n - have];
        padded.append(&mut self.slots);
        self.slots = padded;
        true
    }

    /// Top-aligned pointwise join. Differing depths pad the shorter stack
    /// with `Unknown` at the bottom. With `widen`, the depth of `self` is
    /// kept and every changed slot becomes `Unknown`. Returns whether `self`
    /// changed.
    pub fn join(&mut self, other: &AbstractStack, widen: bool) -> bool {
        let depth = if widen { self.depth() } else { self.depth().max(other.depth()) };
        let slot = |s: &AbstractStack, from_top: usize| -> Value {
            s.slots.len().checked_sub(from_top + 1).map_or(Value::Unknown, |i| s.slots[i].clone())
        };
        let mut joined = Vec::with_capacity(depth);
        for from_top in (0..depth).rev() {
            let mine = slot(self, from_top);
            let j = mine.join(&slot(other, from_top));
            joined.push(if widen && j != mine { Value::Unknown } else { j });
        }
        let overflow = self.overflow || other.overflow;
        let changed = joined != self.slots || overflow != self.overflow;
        self.slots = joined;
        self.overflow = overflow;
        changed
    }
}

/// Maps each value-defining instruction to its register.
#[derive(Debug, Clone, Default)]
pub struct Registers {
    by_pc: HashMap<u64, RegId>,
    count: u32,
}

impl Registers {
    /// Numbers value-defining instructions in stream order starting at `first`.
    pub fn allocate(instructions: &[Instruction], first: u32) -> Self {
        let mut by_pc = HashMap::new();
        let mut next = first;
        for insn in instructions {
            if insn.opcode.stack_out == 1 {
                by_pc.insert(insn.pc, RegId(next));
                next += 1;
            }
        }
        Registers { by_pc, count: next.saturating_sub(first) }
    }

    pub fn get(&self, pc: u64) -> Option<RegId> {
        self.by_pc.get(&pc).copied()
    }

    pub fn len(&self) -> usize {
        self.count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Largest register id handed out.
    pub fn max_id(&self) -> u32 {
        self.by_pc.values().map(|r| r.0).max().unwrap_or(0)
    }
}

/// Result of lifting one block from a given entry stack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLift {
    pub statements: Vec<RtlStatement>,
    pub exit: AbstractStack,
    /// Number of instructions that popped below the entry stack.
    pub underflows: usize,
}

/// Lifts a straight-line instruction sequence. PUSH becomes `Vk = CONST c`;
/// DUP, SWAP and POP only rearrange the abstract stack.
pub fn lift_block(instructions: &[Instruction], entry: &AbstractStack, regs: &Registers) -> BlockLift {
    let mut stack = entry.clone();
    let mut statements = Vec::new();
    let mut underflows = 0;
    for insn in instructions {
        let op = insn.opcode;
        if op.is_push() {
            let reg = regs.get(insn.pc).expect("push defines a register");
            let value = insn.push_value().unwrap_or_default();
            statements.push(RtlStatement { pc: insn.pc, def: Some(reg), op: "CONST", args: vec![Value::Const(value)] });
            stack.push(Value::Reg(reg));
        } else if op.is_dup() {
            let n = op.stack_in as usize;
            underflows += usize::from(stack.ensure_depth(n));
            let v = stack.slots[stack.slots.len() - n].clone();
            stack.push(v);
        } else if op.is_swap() {
            let n = op.stack_in as usize;
            underflows += usize::from(stack.ensure_depth(n));
            let len = stack.slots.len();
            stack.slots.swap(len - 1, len - n);
        } else if op.byte == 0x50 {
            underflows += usize::from(stack.ensure_depth(1));
            stack.slots.pop();
        } else {
            let n = op.stack_in as usize;
            underflows += usize::from(stack.ensure_depth(n));
            let args = stack.slots.split_off(stack.slots.len() - n);
            let def = if op.stack_out == 1 { regs.get(insn.pc) } else { None };
            statements.push(RtlStatement { pc: insn.pc, def, op: op.name, args });
            if let Some(d) = def {
                stack.push(Value::Reg(d));
            }
        }
    }
    BlockLift { statements, exit: stack, underflows }
}

/// Control transfer at the end of a lifted block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Terminator {
    Jump(BTreeSet<u64>),
    JumpI { targets: BTreeSet<u64>, fallthrough: Option<u64> },
    Fallthrough(u64),
    Halt,
}

impl Terminator {
    /// Successor block entry pcs.
    pub fn successors(&self) -> Vec<u64> {
        match self {
            Terminator::Jump(t) => t.iter().copied().collect(),
            Terminator::JumpI { targets, fallthrough } => targets.iter().copied().chain(*fallthrough).collect(),
            Terminator::Fallthrough(n) => vec![*n],
            Terminator::Halt => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub entry_pc: u64,
    /// Instruction index range in the program's stream.
    pub range: std::ops::Range<usize>,
    pub entry_stack: AbstractStack,
    pub exit_stack: AbstractStack,
    pub statements: Vec<RtlStatement>,
    pub terminator: Terminator,
    pub underflows: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LiftDiagnostics {
    pub unresolved_jumps: usize,
    pub stack_underflows: usize,
    pub stack_overflows: usize,
    /// The fixpoint hit the pass cap and widened somewhere.
    pub widened: bool,
}

/// A fully lifted contract.
#[derive(Debug, Clone)]
pub struct LiftedProgram {
    pub instructions: Vec<Instruction>,
    pub blocks: Vec<BasicBlock>,
    pub consts: ConstEnv,
    /// Keyed by the pc of each JUMP/JUMPI.
    pub jumps: BTreeMap<u64, JumpTarget>,
    pub diagnostics: LiftDiagnostics,
}

impl LiftedProgram {
    /// All statements in pc order.
    pub fn statements(&self) -> impl Iterator<Item = &RtlStatement> + Clone {
        self.blocks.iter().flat_map(|b| b.statements.iter())
    }

    /// One statement per line, `PC: Vk = OP args`.
    pub fn rtl_dump(&self) -> String {
        let mut s = String::new();
        for st in self.statements() {
            s.push_str(&st.to_string());
            s.push('\n');
        }
        s
    }

    pub fn block_index(&self, entry_pc: u64) -> Option<usize> {
        self.blocks.binary_search_by_key(&entry_pc, |b| b.entry_pc).ok()
    }
}

pub fn lift(code: &[u8]) -> LiftedProgram {
    lift_instructions(disassemble(code))
}

pub fn lift_instructions(instructions: Vec<Instruction>) -> LiftedProgram {
    let skeletons = split_blocks(&instructions);
    let regs = Registers::allocate(&instructions, 1);
    let analysis = resolve_jumps(&instructions, &skeletons, &regs);

    let mut diagnostics = LiftDiagnostics { widened: analysis.widened, ..Default::default() };
    let mut blocks = Vec::with_capacity(skeletons.len());
    for (i, sk) in skeletons.iter().enumerate() {
        let entry = analysis.entry_stacks[i].clone();
        let lifted = lift_block(&instructions[sk.range.clone()], &entry, &regs);
        let last_pc = instructions[sk.range.end - 1].pc;
        let next = skeletons.get(i + 1).map(|n| n.entry_pc);
        let terminator = match sk.exit {
            BlockExit::Jump => Terminator::Jump(analysis.targets[&last_pc].targets.clone()),
            BlockExit::JumpI => Terminator::JumpI {
                targets: analysis.targets[&last_pc].targets.clone(),
                fallthrough: next,
            },
            BlockExit::Fallthrough => next.map_or(Terminator::Halt, Terminator::Fallthrough),
            BlockExit::Halt => Terminator::Halt,
        };
        diagnostics.stack_underflows += lifted.underflows;
        diagnostics.stack_overflows += usize::from(lifted.exit.overflow && !entry.overflow);
        blocks.push(BasicBlock {
            entry_pc: sk.entry_pc,
            range: sk.range.clone(),
            entry_stack: entry,
            exit_stack: lifted.exit,
            statements: lifted.statements,
            terminator,
            underflows: lifted.underflows,
        });
    }
    diagnostics.unresolved_jumps = analysis.targets.values().filter(|t| t.unresolved).count();
    LiftedProgram { instructions, blocks, consts: analysis.consts, jumps: analysis.targets, diagnostics }
}
