// SPDX-License-Identifier: Apache-2.0

//! Seeded program generators and independent oracles shared by the
//! integration and acceptance tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use primitive_types::U256;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use srgkit::disasm::defined_opcodes;
use srgkit::graphio::vocab;
use srgkit::label::Label;
use srgkit::srg::{Diagnostics, Relation, SemanticNode, Srg, TypedEdge};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    rand::SeedableRng::seed_from_u64(seed)
}

pub mod op {
    pub const STOP: u8 = 0x00;
    pub const ADD: u8 = 0x01;
    pub const MUL: u8 = 0x02;
    pub const SUB: u8 = 0x03;
    pub const DIV: u8 = 0x04;
    pub const EXP: u8 = 0x0a;
    pub const LT: u8 = 0x10;
    pub const GT: u8 = 0x11;
    pub const EQ: u8 = 0x14;
    pub const ISZERO: u8 = 0x15;
    pub const AND: u8 = 0x16;
    pub const OR: u8 = 0x17;
    pub const XOR: u8 = 0x18;
    pub const BYTE: u8 = 0x1a;
    pub const SHL: u8 = 0x1b;
    pub const SHR: u8 = 0x1c;
    pub const KECCAK256: u8 = 0x20;
    pub const CALLVALUE: u8 = 0x34;
    pub const CALLDATALOAD: u8 = 0x35;
    pub const POP: u8 = 0x50;
    pub const MLOAD: u8 = 0x51;
    pub const MSTORE: u8 = 0x52;
    pub const MSTORE8: u8 = 0x53;
    pub const SLOAD: u8 = 0x54;
    pub const SSTORE: u8 = 0x55;
    pub const JUMP: u8 = 0x56;
    pub const JUMPI: u8 = 0x57;
    pub const JUMPDEST: u8 = 0x5b;
    pub const PUSH1: u8 = 0x60;
    pub const PUSH2: u8 = 0x61;
    pub const DUP1: u8 = 0x80;
    pub const SWAP1: u8 = 0x90;
}

/// How a jump destination is materialized on the stack.
#[derive(Debug, Clone, Copy)]
enum TargetExpr {
    Direct,
    AddK(u16),
    XorK(u16),
    SubK(u16),
    Shr1,
    DupPop,
}

/// (immediate offset, label, transform, transform argument)
type Fixup = (usize, usize, fn(u64, u16) -> u64, u16);

/// Tiny assembler with label fixups for 2-byte immediates.
#[derive(Default)]
pub struct Asm {
    pub code: Vec<u8>,
    labels: BTreeMap<usize, u64>,
    fixups: Vec<Fixup>,
}

impl Asm {
    pub fn pc(&self) -> u64 {
        self.code.len() as u64
    }

    pub fn op(&mut self, b: u8) -> u64 {
        let pc = self.pc();
        self.code.push(b);
        pc
    }

    /// Smallest PUSHn for `v` (PUSH0 for zero half of the time).
    pub fn push(&mut self, v: u64, rng: &mut Rng8) {
        if v == 0 && rng.gen_bool(0.5) {
            self.code.push(0x5f);
            return;
        }
        let bytes = v.to_be_bytes();
        let skip = bytes.iter().take_while(|b| **b == 0).count().min(7);
        let imm = &bytes[skip..];
        self.code.push(0x5f + imm.len() as u8);
        self.code.extend_from_slice(imm);
    }

    fn push_label(&mut self, label: usize, f: fn(u64, u16) -> u64, k: u16) {
        self.code.push(op::PUSH2);
        self.fixups.push((self.code.len(), label, f, k));
        self.code.extend([0, 0]);
    }

    pub fn label_here(&mut self, label: usize) {
        self.labels.insert(label, self.pc());
    }

    pub fn label(&self, label: usize) -> u64 {
        self.labels[&label]
    }

    pub fn finish(mut self) -> Vec<u8> {
        for (at, label, f, k) in std::mem::take(&mut self.fixups) {
            let v = f(self.labels[&label], k);
            assert!(v <= 0xffff, "immediate overflow");
            self.code[at..at + 2].copy_from_slice(&(v as u16).to_be_bytes());
        }
        self.code
    }

    /// Leaves the pc of `label` on top of the stack through some constant
    /// arithmetic.
    fn target(&mut self, label: usize, rng: &mut Rng8) {
        let expr = match rng.gen_range(0..6) {
            0 => TargetExpr::Direct,
            1 => TargetExpr::AddK(rng.gen_range(1..0x100)),
            2 => TargetExpr::XorK(rng.gen_range(1..0x100)),
            3 => TargetExpr::SubK(rng.gen_range(1..0x100)),
            4 => TargetExpr::Shr1,
            _ => TargetExpr::DupPop,
        };
        match expr {
            TargetExpr::Direct => self.push_label(label, |t, _| t, 0),
            TargetExpr::AddK(k) => {
                // (t + k) - k
                self.push_label(label, |t, _| t, 0);
                self.push(k as u64, rng);
                self.op(op::ADD);
                self.push(k as u64, rng);
                self.op(op::SWAP1);
                self.op(op::SUB);
            }
            TargetExpr::XorK(k) => {
                self.push_label(label, |t, k| t ^ k as u64, k);
                self.push(k as u64, rng);
                self.op(op::XOR);
            }
            TargetExpr::SubK(k) => {
                // SUB computes top - next; SWAP1 brings t + k on top
                self.push_label(label, |t, k| t + k as u64, k);
                self.push(k as u64, rng);
                self.op(op::SWAP1);
                self.op(op::SUB);
            }
            TargetExpr::Shr1 => {
                self.push_label(label, |t, _| t * 2, 0);
                self.push(1, rng);
                self.op(op::SHR);
            }
            TargetExpr::DupPop => {
                self.push_label(label, |t, _| t, 0);
                self.op(op::DUP1);
                self.op(op::POP);
            }
        }
    }

    /// A stack-neutral snippet that never touches existing stack items.
    fn noise(&mut self, rng: &mut Rng8) {
        const BINOPS: [u8; 14] = [
            op::ADD, op::SUB, op::MUL, op::DIV, op::AND, op::OR, op::XOR, op::LT, op::GT, op::EQ, op::SHL, op::SHR,
            op::BYTE, op::EXP,
        ];
        for _ in 0..rng.gen_range(0..3) {
            match rng.gen_range(0..7) {
                0 => {
                    self.push(rng.gen_range(0..1000), rng);
                    self.op(op::POP);
                }
                1 => {
                    self.push(rng.gen_range(0..64), rng);
                    self.push(rng.gen_range(0..64), rng);
                    self.op(*BINOPS.choose(rng).unwrap());
                    self.op(op::POP);
                }
                2 => {
                    self.push(rng.gen_range(0..1000), rng);
                    self.push(rng.gen_range(0..4) * 0x20, rng);
                    self.op(op::MSTORE);
                }
                3 => {
                    self.push(rng.gen_range(0..4) * 0x20, rng);
                    self.op(op::MLOAD);
                    self.op(op::POP);
                }
                4 => {
                    self.op(op::CALLVALUE);
                    self.op(op::ISZERO);
                    self.op(op::POP);
                }
                5 => {
                    self.push(rng.gen_range(0..1000), rng);
                    self.op(op::DUP1);
                    self.op(op::SWAP1);
                    self.op(op::POP);
                    self.op(op::POP);
                }
                _ => {
                    self.push(rng.gen_range(0..9), rng);
                    self.push(rng.gen_range(0..1000), rng);
                    self.op(op::SSTORE);
                }
            }
        }
    }
}

/// Structured program whose every jump destination is computed from
/// constants: a chain of main blocks (fallthroughs, direct jumps, JUMPIs on
/// calldata, calls into shared leaf subroutines that return through a pushed
/// return address) followed by the subroutines. Every block is reachable.
pub fn gen_jump_program(rng: &mut Rng8) -> Vec<u8> {
    let n_sub = rng.gen_range(1..=3);
    let n_main = rng.gen_range(n_sub + 2..=n_sub + 10);
    let mut calls: BTreeMap<usize, usize> = BTreeMap::new();
    let mut call_sites: Vec<usize> = (0..n_main - 1).collect();
    call_sites.shuffle(rng);
    for (s, &site) in call_sites.iter().take(n_sub).enumerate() {
        calls.insert(site, s);
    }
    let mut a = Asm::default();
    for i in 0..n_main {
        a.label_here(i);
        a.op(op::JUMPDEST);
        a.noise(rng);
        if i == n_main - 1 {
            a.op(op::STOP);
            break;
        }
        let choice = if calls.contains_key(&i) { 3 } else { rng.gen_range(0..4) };
        match choice {
            0 => {}
            1 => {
                a.target(i + 1, rng);
                a.op(op::JUMP);
            }
            2 => {
                if rng.gen_bool(0.5) {
                    a.op(op::CALLVALUE);
                } else {
                    a.push(rng.gen_range(0..4) * 0x20, rng);
                    a.op(op::CALLDATALOAD);
                }
                a.target(rng.gen_range(0..n_main), rng);
                a.op(op::JUMPI);
            }
            _ => {
                let s = calls.get(&i).copied().unwrap_or_else(|| rng.gen_range(0..n_sub));
                a.target(i + 1, rng);
                a.target(n_main + s, rng);
                a.op(op::JUMP);
            }
        }
    }
    for s in 0..n_sub {
        a.label_here(n_main + s);
        a.op(op::JUMPDEST);
        a.noise(rng);
        a.op(op::JUMP);
    }
    a.finish()
}

fn imm_len(b: u8) -> usize {
    if (0x60..=0x7f).contains(&b) {
        (b - 0x5f) as usize
    } else {
        0
    }
}

/// Concrete semantics of the opcodes the generators emit. Values that come
/// from the environment are 0.
fn step_value(b: u8, stack: &mut Vec<U256>) {
    let mut pop = || stack.pop().expect("generator keeps the stack balanced");
    match b {
        op::ADD | op::MUL | op::SUB | op::DIV | op::EXP | op::LT | op::GT | op::EQ | op::AND | op::OR | op::XOR
        | op::BYTE | op::SHL | op::SHR => {
            let a = pop();
            let c = pop();
            let r = match b {
                op::ADD => a.overflowing_add(c).0,
                op::MUL => a.overflowing_mul(c).0,
                op::SUB => a.overflowing_sub(c).0,
                op::DIV => a.checked_div(c).unwrap_or_default(),
                op::EXP => a.overflowing_pow(c).0,
                op::LT => U256::from((a < c) as u8),
                op::GT => U256::from((a > c) as u8),
                op::EQ => U256::from((a == c) as u8),
                op::AND => a & c,
                op::OR => a | c,
                op::XOR => a ^ c,
                op::BYTE => {
                    if a < U256::from(32) {
                        U256::from(c.byte(31 - a.as_usize()))
                    } else {
                        U256::zero()
                    }
                }
                op::SHL => {
                    if a < U256::from(256) {
                        c << a.as_usize()
                    } else {
                        U256::zero()
                    }
                }
                _ => {
                    if a < U256::from(256) {
                        c >> a.as_usize()
                    } else {
                        U256::zero()
                    }
                }
            };
            stack.push(r);
        }
        op::ISZERO => {
            let a = pop();
            stack.push(U256::from(a.is_zero() as u8));
        }
        op::CALLVALUE => stack.push(U256::zero()),
        op::CALLDATALOAD | op::MLOAD | op::SLOAD => {
            pop();
            stack.push(U256::zero());
        }
        op::KECCAK256 => {
            pop();
            pop();
            stack.push(U256::zero());
        }
        op::POP => {
            pop();
        }
        op::MSTORE | op::MSTORE8 | op::SSTORE => {
            pop();
            pop();
        }
        0x80..=0x8f => {
            let n = (b - 0x80) as usize;
            let v = stack[stack.len() - 1 - n];
            stack.push(v);
        }
        0x90..=0x9f => {
            let n = (b - 0x90 + 1) as usize;
            let top = stack.len() - 1;
            stack.swap(top, top - n);
        }
        _ => panic!("oracle does not model opcode {b:#04x}"),
    }
}

/// Path-exploring concrete interpreter: follows both sides of every JUMPI
/// and records the destinations each JUMP/JUMPI pc actually sees.
pub fn oracle_jump_targets(code: &[u8]) -> BTreeMap<u64, BTreeSet<u64>> {
    let mut out: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut seen: HashSet<(usize, Vec<U256>)> = HashSet::new();
    let mut todo = vec![(0usize, Vec::<U256>::new())];
    let is_dest = |t: U256| t < U256::from(code.len()) && code[t.as_usize()] == op::JUMPDEST && {
        // a JUMPDEST byte inside push data is not a destination
        let mut pc = 0;
        while pc < t.as_usize() {
            pc += 1 + imm_len(code[pc]);
        }
        pc == t.as_usize()
    };
    while let Some((mut pc, mut stack)) = todo.pop() {
        loop {
            if !seen.insert((pc, stack.clone())) {
                break;
            }
            let Some(&b) = code.get(pc) else { break };
            match b {
                op::STOP => break,
                op::JUMPDEST => pc += 1,
                0x5f..=0x7f => {
                    let n = imm_len(b);
                    let mut imm = [0u8; 32];
                    let avail = &code[pc + 1..(pc + 1 + n).min(code.len())];
                    imm[32 - n..32 - n + avail.len()].copy_from_slice(avail);
                    stack.push(U256::from_big_endian(&imm));
                    pc += 1 + n;
                }
                op::JUMP => {
                    let t = stack.pop().unwrap();
                    out.entry(pc as u64).or_default().insert(t.low_u64());
                    if !is_dest(t) {
                        break;
                    }
                    pc = t.as_usize();
                }
                op::JUMPI => {
                    let t = stack.pop().unwrap();
                    stack.pop().unwrap();
                    out.entry(pc as u64).or_default().insert(t.low_u64());
                    if is_dest(t) {
                        todo.push((t.as_usize(), stack.clone()));
                    }
                    pc += 1;
                }
                _ => {
                    step_value(b, &mut stack);
                    pc += 1;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Space {
    Memory,
    Storage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessRecord {
    pub pc: u64,
    pub space: Space,
    pub address: u64,
    pub write: bool,
}

/// Straight-line-ish program (fallthrough blocks and forward JUMPIs) whose
/// memory and storage accesses all use constant addresses. Returns the code
/// and the accesses in pc order, as the generator emitted them.
pub fn gen_effect_program(rng: &mut Rng8) -> (Vec<u8>, Vec<AccessRecord>) {
    let mut a = Asm::default();
    let mut acc = Vec::new();
    let mut next_label = 0usize;
    let mut pending_jumpi: Option<usize> = None;
    let addr_expr = |a: &mut Asm, addr: u64, rng: &mut Rng8| match rng.gen_range(0..3) {
        0 => a.push(addr, rng),
        1 => {
            let k = rng.gen_range(0..=addr.min(0x40));
            a.push(addr - k, rng);
            a.push(k, rng);
            a.op(op::ADD);
        }
        _ => {
            a.push(addr, rng);
            a.op(op::DUP1);
            a.op(op::POP);
        }
    };
    let n = rng.gen_range(5..40);
    for _ in 0..n {
        match rng.gen_range(0..10) {
            0 => {
                if let Some(l) = pending_jumpi.take() {
                    a.label_here(l);
                }
                a.op(op::JUMPDEST);
            }
            1 if pending_jumpi.is_none() => {
                let l = 1000 + next_label;
                next_label += 1;
                a.op(op::CALLVALUE);
                a.push_label(l, |t, _| t, 0);
                a.op(op::JUMPI);
                pending_jumpi = Some(l);
            }
            2 => {
                a.push(rng.gen_range(0..100), rng);
                a.push(rng.gen_range(0..100), rng);
                a.op(op::ADD);
                a.op(op::POP);
            }
            k => {
                let storage = k % 2 == 0;
                let write = rng.gen_bool(0.5);
                let address = if storage { rng.gen_range(0..4) } else { rng.gen_range(0..4) * 0x20 };
                let space = if storage { Space::Storage } else { Space::Memory };
                let pc = if write {
                    if rng.gen_bool(0.5) {
                        a.push(rng.gen_range(0..1000), rng);
                    } else {
                        a.op(op::CALLVALUE);
                    }
                    addr_expr(&mut a, address, rng);
                    let b = if storage { op::SSTORE } else if rng.gen_bool(0.2) { op::MSTORE8 } else { op::MSTORE };
                    a.op(b)
                } else if !storage && rng.gen_bool(0.2) {
                    a.push(0x20, rng);
                    addr_expr(&mut a, address, rng);
                    let pc = a.op(op::KECCAK256);
                    a.op(op::POP);
                    pc
                } else {
                    addr_expr(&mut a, address, rng);
                    let pc = a.op(if storage { op::SLOAD } else { op::MLOAD });
                    a.op(op::POP);
                    pc
                };
                acc.push(AccessRecord { pc, space, address, write });
            }
        }
    }
    if let Some(l) = pending_jumpi.take() {
        a.label_here(l);
        a.op(op::JUMPDEST);
    }
    a.op(op::STOP);
    (a.finish(), acc)
}

/// Same-slot ordering pairs `(later pc, earlier pc)` by brute force over
/// all access pairs: read-after-write, write-after-write and
/// write-after-read, each with no write to the slot in between.
pub fn oracle_effect_pairs(acc: &[AccessRecord]) -> BTreeSet<(u64, u64)> {
    let mut out = BTreeSet::new();
    for j in 0..acc.len() {
        for i in 0..j {
            let (x, y) = (acc[i], acc[j]);
            if (x.space, x.address) != (y.space, y.address) || (!x.write && !y.write) {
                continue;
            }
            let blocked = acc[i + 1..j].iter().any(|z| z.write && (z.space, z.address) == (x.space, x.address));
            if !blocked && x.pc != y.pc {
                out.insert((y.pc, x.pc));
            }
        }
    }
    out
}

/// Random program that never underflows along its linear order; jumps go to
/// random JUMPDESTs of the program.
pub fn gen_random_program(rng: &mut Rng8, len: usize) -> Vec<u8> {
    let ops: Vec<_> = defined_opcodes().filter(|o| !o.is_jump() && !o.is_jumpi() && !o.is_push()).collect();
    let mut a = Asm::default();
    let mut depth = 0usize;
    let mut labels = 0usize;
    let mut pending: Vec<usize> = Vec::new();
    let mut placed: Vec<usize> = Vec::new();
    for _ in 0..len {
        match rng.gen_range(0..10) {
            0..=2 => {
                let v: u64 = if rng.gen_bool(0.7) { rng.gen_range(0..256) } else { rng.gen() };
                a.push(v, rng);
                depth += 1;
            }
            3 if depth >= 1 => {
                let l = if !placed.is_empty() && rng.gen_bool(0.3) {
                    *placed.choose(rng).unwrap()
                } else {
                    labels += 1;
                    pending.push(labels - 1);
                    labels - 1
                };
                a.push_label(l, |t, _| t, 0);
                a.op(if rng.gen_bool(0.5) { op::JUMP } else { op::JUMPI });
                depth -= 1;
            }
            4 => {
                let l = pending.pop().unwrap_or_else(|| {
                    labels += 1;
                    labels - 1
                });
                a.label_here(l);
                placed.push(l);
                a.op(op::JUMPDEST);
            }
            _ => {
                let o = ops.choose(rng).unwrap();
                if (o.stack_in as usize) <= depth && depth < 1000 {
                    a.op(o.byte);
                    depth = depth - o.stack_in as usize + o.stack_out as usize;
                }
            }
        }
    }
    for l in pending {
        a.label_here(l);
        a.op(op::JUMPDEST);
    }
    a.op(op::STOP);
    a.finish()
}

/// Random but valid SRG: increasing pcs, vocabulary opcodes, unique edges,
/// no data self-loops.
pub fn random_srg(rng: &mut Rng8) -> Srg {
    let n = rng.gen_range(0..60);
    let v = vocab();
    let mut pc = 0u64;
    let nodes: Vec<SemanticNode> = (0..n)
        .map(|id| {
            pc += rng.gen_range(1..40);
            SemanticNode { id, pc, op: v[rng.gen_range(0..v.len())].to_string() }
        })
        .collect();
    let mut edges = BTreeSet::new();
    if n > 0 {
        for _ in 0..rng.gen_range(0..n * 3) {
            let e = TypedEdge::new(rng.gen_range(0..n), rng.gen_range(0..n), Relation::ALL[rng.gen_range(0..3)]);
            if !(e.relation == Relation::Data && e.src == e.dst) {
                edges.insert(e);
            }
        }
    }
    let mut edges: Vec<TypedEdge> = edges.into_iter().collect();
    edges.shuffle(rng);
    const IDS: [&str; 4] = ["0xdeadbeef", "plain", "quo\"te\\back", "ünïcode/äddr"];
    Srg {
        contract_id: format!("{}-{}", IDS[rng.gen_range(0..IDS.len())], rng.gen::<u32>()),
        label: [Label::Benign, Label::Aec, Label::Unlabeled][rng.gen_range(0..3)],
        nodes,
        edges,
        diagnostics: Diagnostics { unresolved_jumps: rng.gen_range(0..100), stack_underflows: rng.gen_range(0..100) },
    }
}

/// A connected `n`-node graph: a path plus random chords.
pub fn random_connected_srg(rng: &mut Rng8, n: usize) -> Srg {
    let v = vocab();
    let nodes = (0..n).map(|id| SemanticNode { id, pc: 2 * id as u64, op: v[rng.gen_range(0..v.len())].to_string() }).collect();
    let mut edges: BTreeSet<TypedEdge> = (1..n).map(|i| TypedEdge::new(i, i - 1, Relation::ALL[i % 3])).collect();
    for _ in 0..n {
        let (s, d) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if s != d {
            edges.insert(TypedEdge::new(s, d, Relation::ALL[rng.gen_range(0..3)]));
        }
    }
    Srg {
        contract_id: "connected".into(),
        label: Label::Aec,
        nodes,
        edges: edges.into_iter().collect(),
        diagnostics: Diagnostics::default(),
    }
}
