// SPDX-License-Identifier: Apache-2.0

//! Jump-target resolution by abstract interpretation over stacks of
//! reaching definitions and per-register constant sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use primitive_types::U256;

use super::fold::eval_statement;
use super::{lift_block, AbstractStack, BlockExit, BlockSkeleton, ConstEnv, ConstSet, RegId, Registers, Value};
use crate::disasm::Instruction;

/// Visits per block before joins start widening.
pub const FIXPOINT_PASS_CAP: usize = 16;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JumpTarget {
    /// JUMPDEST pcs the jump may reach.
    pub targets: BTreeSet<u64>,
    /// The destination operand is not constant.
    pub unresolved: bool,
}

#[derive(Debug, Clone)]
pub struct JumpAnalysis {
    /// Final entry stack per block (empty for seeded entry points).
    pub entry_stacks: Vec<AbstractStack>,
    pub consts: ConstEnv,
    /// Keyed by the pc of each JUMP/JUMPI.
    pub targets: BTreeMap<u64, JumpTarget>,
    pub widened: bool,
}

struct Solver<'a> {
    instructions: &'a [Instruction],
    blocks: &'a [BlockSkeleton],
    regs: &'a Registers,
    jumpdests: HashMap<u64, usize>,
    entry: Vec<Option<AbstractStack>>,
    visits: Vec<usize>,
    consts: ConstEnv,
    /// Blocks whose entry stack mentions a register.
    readers: HashMap<RegId, BTreeSet<usize>>,
    worklist: BTreeSet<usize>,
    widened: bool,
}

impl Solver<'_> {
    fn dest_set(&self, dest: Option<&Value>) -> ConstSet {
        dest.map_or(ConstSet::Top, |v| self.consts.operand(v))
    }

    fn resolved_blocks(&self, set: &ConstSet) -> Vec<usize> {
        match set {
            ConstSet::Top => Vec::new(),
            ConstSet::Known(vals) => vals
                .iter()
                .filter(|v| **v <= U256::from(u64::MAX))
                .filter_map(|v| self.jumpdests.get(&v.as_u64()).copied())
                .collect(),
        }
    }

    fn merge_entry(&mut self, block: usize, exit: &AbstractStack) {
        let widen = self.visits[block] >= FIXPOINT_PASS_CAP;
        let changed = match &mut self.entry[block] {
            Some(stack) => {
                self.widened |= widen && exit.depth() > stack.depth();
                stack.join(exit, widen)
            }
            slot @ None => {
                *slot = Some(exit.clone());
                true
            }
        };
        if changed {
            self.widened |= widen;
            for r in self.entry[block].as_ref().unwrap().slots.iter().flat_map(Value::regs) {
                self.readers.entry(*r).or_default().insert(block);
            }
            self.worklist.insert(block);
        }
    }

    fn visit(&mut self, b: usize) {
        let sk = &self.blocks[b];
        let entry = self.entry[b].clone().expect("visited blocks are seeded");
        let widen = self.visits[b] >= FIXPOINT_PASS_CAP;
        self.visits[b] += 1;
        let lifted = lift_block(&self.instructions[sk.range.clone()], &entry, self.regs);

        for stmt in &lifted.statements {
            if let Some(d) = stmt.def {
                let value = eval_statement(stmt, &self.consts);
                if self.consts.join(d, &value, widen) {
                    self.widened |= widen;
                    if let Some(readers) = self.readers.get(&d) {
                        self.worklist.extend(readers.iter().copied());
                    }
                }
            }
        }

        let mut succs = Vec::new();
        match sk.exit {
            BlockExit::Jump | BlockExit::JumpI => {
                let jump = lifted.statements.last().expect("jump emits a statement");
                let set = self.dest_set(jump.args.last());
                succs.extend(self.resolved_blocks(&set));
                if sk.exit == BlockExit::JumpI && b + 1 < self.blocks.len() {
                    succs.push(b + 1);
                }
            }
            BlockExit::Fallthrough if b + 1 < self.blocks.len() => succs.push(b + 1),
            _ => {}
        }
        for s in succs {
            self.merge_entry(s, &lifted.exit);
        }
    }

    fn run(&mut self) {
        let mut next_seed = 0;
        loop {
            while let Some(b) = self.worklist.pop_first() {
                self.visit(b);
            }
            while next_seed < self.blocks.len() && self.entry[next_seed].is_some() {
                next_seed += 1;
            }
            if next_seed == self.blocks.len() {
                break;
            }
            // unreached code (e.g. runtime code inside creation bytecode)
            self.entry[next_seed] = Some(AbstractStack::new());
            self.worklist.insert(next_seed);
        }
    }
}

/// Runs the constant-stack fixpoint over all blocks and reports the targets
/// of every JUMP and JUMPI.
///
/// Analysis starts at pc 0; once stable, the lowest unreached block is
/// seeded with an empty stack and the process repeats until every block has
/// been analyzed. A destination operand whose constant set is known yields
/// the JUMPDEST members of that set; otherwise the jump is unresolved.
pub fn resolve_jumps(instructions: &[Instruction], blocks: &[BlockSkeleton], regs: &Registers) -> JumpAnalysis {
    let jumpdests = blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| instructions[b.range.start].opcode.is_jumpdest())
        .map(|(i, b)| (b.entry_pc, i))
        .collect();
    let mut solver = Solver {
        instructions,
        blocks,
        regs,
        jumpdests,
        entry: vec![None; blocks.len()],
        visits: vec![0; blocks.len()],
        consts: ConstEnv::new(regs.max_id() as usize),
        readers: HashMap::new(),
        worklist: BTreeSet::new(),
        widened: false,
    };
    if !blocks.is_empty() {
        solver.entry[0] = Some(AbstractStack::new());
        solver.worklist.insert(0);
    }
    solver.run();

    let entry_stacks: Vec<AbstractStack> = solver.entry.iter().map(|e| e.clone().unwrap_or_default()).collect();
    let mut targets = BTreeMap::new();
    for (b, sk) in blocks.iter().enumerate() {
        if !matches!(sk.exit, BlockExit::Jump | BlockExit::JumpI) {
            continue;
        }
        let lifted = lift_block(&instructions[sk.range.clone()], &entry_stacks[b], regs);
        let jump = lifted.statements.last().expect("jump emits a statement");
        let set = solver.dest_set(jump.args.last());
        let target = JumpTarget {
            targets: solver.resolved_blocks(&set).into_iter().map(|i| blocks[i].entry_pc).collect(),
            unresolved: set.is_top(),
        };
        targets.insert(jump.pc, target);
    }
    JumpAnalysis { entry_stacks, consts: solver.consts, targets, widened: solver.widened }
}
