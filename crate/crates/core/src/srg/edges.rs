// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};

use primitive_types::U256;

use super::{Relation, TypedEdge};
use crate::lifter::{ConstEnv, RegId, RtlStatement, Value};

/// Def-use edges `(use, def)`, deduplicated.
pub fn build_data_edges<'a>(
    statements: impl IntoIterator<Item = &'a RtlStatement> + Clone,
    node_of: &BTreeMap<u64, usize>,
) -> Vec<TypedEdge> {
    let defs: HashMap<RegId, u64> = statements.clone().into_iter().filter_map(|s| s.def.map(|d| (d, s.pc))).collect();
    let mut out = BTreeSet::new();
    for st in statements {
        let Some(&user) = node_of.get(&st.pc) else { continue };
        for r in st.uses() {
            if let Some(def) = defs.get(&r).and_then(|pc| node_of.get(pc)) {
                if *def != user {
                    out.insert(TypedEdge::new(user, *def, Relation::Data));
                }
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Space {
    Memory,
    Storage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlotAddress {
    Const(U256),
    /// Every non-constant address of one space.
    UnknownBucket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotKey {
    pub space: Space,
    pub address: SlotAddress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Access {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MemoryAccess {
    pub slot: SlotKey,
    pub access: Access,
}

/// Which operand (counted from the top of stack) addresses memory or
/// storage, per opcode. `exact` accesses fall back to the unknown bucket when
/// the address is not constant; the others are dropped in that case.
fn access_table(op: &str) -> &'static [(Space, Access, usize, bool)] {
    use Access::*;
    use Space::*;
    match op {
        "MLOAD" => &[(Memory, Read, 0, true)],
        "MSTORE" | "MSTORE8" => &[(Memory, Write, 0, true)],
        "SLOAD" => &[(Storage, Read, 0, true)],
        "SSTORE" => &[(Storage, Write, 0, true)],
        "CALLDATACOPY" | "CODECOPY" | "RETURNDATACOPY" => &[(Memory, Write, 0, false)],
        "EXTCODECOPY" => &[(Memory, Write, 1, false)],
        "KECCAK256" | "RETURN" | "REVERT" | "LOG0" | "LOG1" | "LOG2" | "LOG3" | "LOG4" => &[(Memory, Read, 0, false)],
        "CREATE" | "CREATE2" => &[(Memory, Read, 1, false)],
        "CALL" | "CALLCODE" => &[(Memory, Read, 3, false), (Memory, Write, 5, false)],
        "DELEGATECALL" | "STATICCALL" => &[(Memory, Read, 2, false), (Memory, Write, 4, false)],
        _ => &[],
    }
}

/// Memory/storage accesses of one statement, reads before writes.
pub fn memory_accesses(stmt: &RtlStatement, env: &ConstEnv) -> Vec<MemoryAccess> {
    let mut out = Vec::new();
    for &(space, access, from_top, exact) in access_table(stmt.op) {
        let Some(arg) = stmt.args.len().checked_sub(from_top + 1).map(|i| &stmt.args[i]) else { continue };
        let address = match arg {
            Value::Const(c) => Some(*c),
            other => env.operand(other).as_single(),
        };
        let address = match (address, exact) {
            (Some(c), _) => SlotAddress::Const(c),
            (None, true) => SlotAddress::UnknownBucket,
            (None, false) => continue,
        };
        out.push(MemoryAccess { slot: SlotKey { space, address }, access });
    }
    out.sort_by_key(|a| a.access);
    out
}

#[derive(Default)]
struct SlotState {
    last_write: Option<usize>,
    reads_since_write: Vec<usize>,
}

/// Side-effect ordering edges from one pc-order scan: a load points at the
/// last store of its slot (read-after-write); a store points at the
/// previous store (write-after-write) and at every load of the slot since
/// that store (write-after-read).
pub fn build_effect_edges<'a>(
    statements: impl IntoIterator<Item = &'a RtlStatement>,
    env: &ConstEnv,
    node_of: &BTreeMap<u64, usize>,
) -> Vec<TypedEdge> {
    let mut slots: HashMap<SlotKey, SlotState> = HashMap::new();
    let mut out = BTreeSet::new();
    let mut add = |src: usize, dst: usize| {
        if src != dst {
            out.insert(TypedEdge::new(src, dst, Relation::Effect));
        }
    };
    for st in statements {
        let Some(&node) = node_of.get(&st.pc) else { continue };
        for acc in memory_accesses(st, env) {
            let state = slots.entry(acc.slot).or_default();
            match acc.access {
                Access::Read => {
                    if let Some(w) = state.last_write {
                        add(node, w);
                    }
                    state.reads_since_write.push(node);
                }
                Access::Write => {
                    if let Some(w) = state.last_write {
                        add(node, w);
                    }
                    for r in state.reads_since_write.drain(..) {
                        add(node, r);
                    }
                    state.last_write = Some(node);
                }
            }
        }
    }
    out.into_iter().collect()
}
