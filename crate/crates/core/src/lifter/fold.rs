// SPDX-License-Identifier: Apache-2.0

//! 256-bit constant folding over single values and small value sets.

use std::collections::BTreeSet;

use primitive_types::{U256, U512};

use super::{RegId, RtlStatement, Value};

/// Maximum number of distinct constants tracked for one value before it
/// collapses to `Top`.
pub const MAX_CONST_SET: usize = 16;

/// Possible constant values of a register or operand.
///
/// `Known` with an empty set is the bottom element (not computed yet).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstSet {
    Known(BTreeSet<U256>),
    Top,
}

impl ConstSet {
    pub fn bottom() -> Self {
        ConstSet::Known(BTreeSet::new())
    }

    pub fn single(v: U256) -> Self {
        ConstSet::Known(BTreeSet::from([v]))
    }

    pub fn as_single(&self) -> Option<U256> {
        match self {
            ConstSet::Known(s) if s.len() == 1 => s.iter().next().copied(),
            _ => None,
        }
    }

    pub fn is_top(&self) -> bool {
        matches!(self, ConstSet::Top)
    }

    fn capped(set: BTreeSet<U256>) -> Self {
        if set.len() > MAX_CONST_SET {
            ConstSet::Top
        } else {
            ConstSet::Known(set)
        }
    }

    pub fn union(&self, other: &ConstSet) -> ConstSet {
        match (self, other) {
            (ConstSet::Known(a), ConstSet::Known(b)) => ConstSet::capped(a.union(b).copied().collect()),
            _ => ConstSet::Top,
        }
    }

    /// Joins `other` into `self`; with `widen` any growth jumps to `Top`.
    /// Returns whether `self` changed.
    pub fn join(&mut self, other: &ConstSet, widen: bool) -> bool {
        let joined = self.union(other);
        if joined == *self {
            return false;
        }
        *self = if widen { ConstSet::Top } else { joined };
        true
    }
}

/// Register constant bindings, indexed by register id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstEnv {
    values: Vec<ConstSet>,
}

impl ConstEnv {
    pub fn new(register_count: usize) -> Self {
        ConstEnv { values: vec![ConstSet::bottom(); register_count + 1] }
    }

    pub fn get(&self, reg: RegId) -> &ConstSet {
        static TOP: ConstSet = ConstSet::Top;
        self.values.get(reg.0 as usize).unwrap_or(&TOP)
    }

    pub fn join(&mut self, reg: RegId, value: &ConstSet, widen: bool) -> bool {
        let idx = reg.0 as usize;
        if idx >= self.values.len() {
            self.values.resize(idx + 1, ConstSet::bottom());
        }
        self.values[idx].join(value, widen)
    }

    pub fn bind(&mut self, reg: RegId, value: U256) {
        self.join(reg, &ConstSet::single(value), false);
    }

    /// Constant set of an operand.
    pub fn operand(&self, v: &Value) -> ConstSet {
        match v {
            Value::Const(c) => ConstSet::single(*c),
            Value::Reg(r) => self.get(*r).clone(),
            Value::Phi(rs) => rs.iter().fold(ConstSet::bottom(), |acc, r| acc.union(self.get(*r))),
            Value::Unknown => ConstSet::Top,
        }
    }
}

fn bool_word(b: bool) -> U256 {
    if b {
        U256::one()
    } else {
        U256::zero()
    }
}

/// Evaluates one foldable opcode. `args` are in statement order (deepest
/// stack slot first, top of stack last). Returns `None` for opcodes that are
/// not folded.
pub fn eval_op(op: &str, args: &[U256]) -> Option<U256> {
    let top = |i: usize| args.get(args.len().checked_sub(i + 1)?).copied();
    let a = top(0);
    let b = top(1);
    let v = match op {
        "ADD" => a?.overflowing_add(b?).0,
        "SUB" => a?.overflowing_sub(b?).0,
        "MUL" => a?.overflowing_mul(b?).0,
        "DIV" => {
            let d = b?;
            if d.is_zero() {
                U256::zero()
            } else {
                a? / d
            }
        }
        "MOD" => {
            let d = b?;
            if d.is_zero() {
                U256::zero()
            } else {
                a? % d
            }
        }
        "ADDMOD" | "MULMOD" => {
            let n = top(2)?;
            if n.is_zero() {
                U256::zero()
            } else {
                let (x, y, n) = (U512::from(a?), U512::from(b?), U512::from(n));
                let r = if op == "ADDMOD" { (x + y) % n } else { (x * y) % n };
                U256::try_from(r).ok()?
            }
        }
        "EXP" => a?.overflowing_pow(b?).0,
        "AND" => a? & b?,
        "OR" => a? | b?,
        "XOR" => a? ^ b?,
        "NOT" => !a?,
        "SHL" => {
            let (shift, value) = (a?, b?);
            if shift >= U256::from(256) {
                U256::zero()
            } else {
                value << shift.as_usize()
            }
        }
        "SHR" => {
            let (shift, value) = (a?, b?);
            if shift >= U256::from(256) {
                U256::zero()
            } else {
                value >> shift.as_usize()
            }
        }
        "LT" => bool_word(a? < b?),
        "GT" => bool_word(a? > b?),
        "EQ" => bool_word(a? == b?),
        "ISZERO" => bool_word(a?.is_zero()),
        "BYTE" => {
            let (i, x) = (a?, b?);
            if i >= U256::from(32) {
                U256::zero()
            } else {
                U256::from(x.to_big_endian()[i.as_usize()])
            }
        }
        _ => return None,
    };
    Some(v)
}

pub fn is_foldable(op: &str) -> bool {
    matches!(
        op,
        "ADD" | "SUB" | "MUL" | "DIV" | "MOD" | "ADDMOD" | "MULMOD" | "EXP" | "AND" | "OR" | "XOR"
            | "NOT" | "SHL" | "SHR" | "LT" | "GT" | "EQ" | "ISZERO" | "BYTE"
    )
}

/// Constant set defined by a statement, given current bindings.
pub(crate) fn eval_statement(stmt: &RtlStatement, env: &ConstEnv) -> ConstSet {
    match stmt.op {
        "CONST" => match stmt.args.first() {
            Some(Value::Const(c)) => ConstSet::single(*c),
            _ => ConstSet::Top,
        },
        "PC" => ConstSet::single(U256::from(stmt.pc)),
        op if is_foldable(op) => {
            let sets: Vec<ConstSet> = stmt.args.iter().map(|a| env.operand(a)).collect();
            let zero = ConstSet::single(U256::zero());
            if matches!(op, "AND" | "MUL") && sets.contains(&zero) {
                return zero;
            }
            let mut lists = Vec::with_capacity(sets.len());
            for s in &sets {
                match s {
                    ConstSet::Top => return ConstSet::Top,
                    ConstSet::Known(v) => lists.push(v.iter().copied().collect::<Vec<_>>()),
                }
            }
            product_fold(op, &lists)
        }
        _ => ConstSet::Top,
    }
}

fn product_fold(op: &str, lists: &[Vec<U256>]) -> ConstSet {
    let total = lists.iter().try_fold(1usize, |acc, l| acc.checked_mul(l.len()));
    match total {
        Some(0) => return ConstSet::bottom(),
        Some(n) if n <= MAX_CONST_SET * MAX_CONST_SET => {}
        _ => return ConstSet::Top,
    }
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; lists.len()];
    let mut args = vec![U256::zero(); lists.len()];
    loop {
        for (k, l) in lists.iter().enumerate() {
            args[k] = l[idx[k]];
        }
        match eval_op(op, &args) {
            Some(v) => {
                out.insert(v);
            }
            None => return ConstSet::Top,
        }
        if out.len() > MAX_CONST_SET {
            return ConstSet::Top;
        }
        // odometer increment
        let mut k = lists.len();
        loop {
            if k == 0 {
                return ConstSet::Known(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Folds a statement to a single constant when its operands allow it.
pub fn fold_constants(stmt: &RtlStatement, env: &ConstEnv) -> Value {
    match eval_statement(stmt, env).as_single() {
        Some(c) => Value::Const(c),
        None => Value::Unknown,
    }
}
