// SPDX-License-Identifier: Apache-2.0

//! Semantic Relation Graph construction.
//!
//! One node per lifted statement (stack shuffles never produce statements,
//! literal pushes become `CONST`). Edges point from the dependent
//! instruction to its dependency: jump -> destination block entry is stored
//! as `(JUMPDEST, JUMP)`, def-use as `(use, def)` and side effects as
//! `(later access, earlier access)`.

mod cfg;
mod edges;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ContractRecord;
use crate::label::Label;
use crate::lifter::{lift, LiftedProgram, RtlStatement};

pub use cfg::{build_cfg, build_control_edges, CfgEdge, CfgEdgeKind};
pub use edges::{build_data_edges, build_effect_edges, memory_accesses, Access, MemoryAccess, SlotAddress, SlotKey, Space};
pub use stats::{aggregate_stats, graph_stats, top_opcodes, GraphStats, RelationRatios, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Control,
    Data,
    Effect,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Control, Relation::Data, Relation::Effect];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Control => "control",
            Relation::Data => "data",
            Relation::Effect => "effect",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemanticNode {
    pub id: usize,
    pub pc: u64,
    pub op: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedEdge {
    pub src: usize,
    pub dst: usize,
    pub relation: Relation,
}

impl TypedEdge {
    pub fn new(src: usize, dst: usize, relation: Relation) -> Self {
        TypedEdge { src, dst, relation }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnostics {
    pub unresolved_jumps: u64,
    pub stack_underflows: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Srg {
    pub contract_id: String,
    pub label: Label,
    pub nodes: Vec<SemanticNode>,
    pub edges: Vec<TypedEdge>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InvariantViolation {
    #[error("node {index} has id {id}")]
    NodeId { index: usize, id: usize },
    #[error("node pcs not strictly increasing at node {0}")]
    NodeOrder(usize),
    #[error("node {0} carries stack-manipulation opcode {1}")]
    ForbiddenOpcode(usize, String),
    #[error("edge {0} endpoint out of range")]
    EdgeRange(usize),
    #[error("edge {0} is a data self-loop")]
    DataSelfLoop(usize),
    #[error("edge {0} duplicates an earlier edge")]
    DuplicateEdge(usize),
}

/// Mnemonics that never become nodes.
pub fn is_removed_opcode(op: &str) -> bool {
    op == "POP" || op.starts_with("PUSH") || op.starts_with("DUP") || op.starts_with("SWAP")
}

impl Srg {
    pub fn empty(contract_id: impl Into<String>, label: Label) -> Self {
        Srg { contract_id: contract_id.into(), label, nodes: Vec::new(), edges: Vec::new(), diagnostics: Diagnostics::default() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges_of(&self, relation: Relation) -> impl Iterator<Item = &TypedEdge> {
        self.edges.iter().filter(move |e| e.relation == relation)
    }

    pub fn node_by_pc(&self, pc: u64) -> Option<&SemanticNode> {
        self.nodes.binary_search_by_key(&pc, |n| n.pc).ok().map(|i| &self.nodes[i])
    }

    /// Checks the structural invariants every SRG must satisfy.
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(InvariantViolation::NodeId { index: i, id: n.id });
            }
            if i > 0 && self.nodes[i - 1].pc >= n.pc {
                return Err(InvariantViolation::NodeOrder(i));
            }
            if is_removed_opcode(&n.op) {
                return Err(InvariantViolation::ForbiddenOpcode(i, n.op.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.src >= self.nodes.len() || e.dst >= self.nodes.len() {
                return Err(InvariantViolation::EdgeRange(i));
            }
            if e.relation == Relation::Data && e.src == e.dst {
                return Err(InvariantViolation::DataSelfLoop(i));
            }
            if !seen.insert(*e) {
                return Err(InvariantViolation::DuplicateEdge(i));
            }
        }
        Ok(())
    }
}

/// One node per retained statement plus the pc -> node id map.
pub fn simplify_nodes<'a>(statements: impl IntoIterator<Item = &'a RtlStatement>) -> (Vec<SemanticNode>, BTreeMap<u64, usize>) {
    let mut nodes = Vec::new();
    let mut by_pc = BTreeMap::new();
    for st in statements {
        let id = nodes.len();
        by_pc.insert(st.pc, id);
        nodes.push(SemanticNode { id, pc: st.pc, op: st.op.to_string() });
    }
    (nodes, by_pc)
}

/// Builds the SRG of an already lifted program.
pub fn srg_from_lifted(contract_id: &str, label: Label, lifted: &LiftedProgram) -> Srg {
    let (nodes, node_of) = simplify_nodes(lifted.statements());
    let cfg = build_cfg(lifted);
    let mut edges: BTreeSet<TypedEdge> = BTreeSet::new();
    edges.extend(build_control_edges(lifted, &cfg, &node_of));
    edges.extend(build_data_edges(lifted.statements(), &node_of));
    edges.extend(build_effect_edges(lifted.statements(), &lifted.consts, &node_of));
    Srg {
        contract_id: contract_id.to_string(),
        label,
        nodes,
        edges: edges.into_iter().collect(),
        diagnostics: Diagnostics {
            unresolved_jumps: lifted.diagnostics.unresolved_jumps as u64,
            stack_underflows: lifted.diagnostics.stack_underflows as u64,
        },
    }
}

pub fn build_srg_from_code(contract_id: &str, label: Label, code: &[u8]) -> Srg {
    srg_from_lifted(contract_id, label, &lift(code))
}

/// Disassemble, lift, resolve jumps, build the CFG and the three relation
/// edge sets.
pub fn build_srg(contract: &ContractRecord) -> Srg {
    build_srg_from_code(&contract.id, contract.label, &contract.bytecode)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: [u8; 9] = [0x60, 0x80, 0x60, 0x40, 0x01, 0x60, 0x20, 0x01, 0x56];

    #[test]
    fn golden_graph() {
        let g = build_srg_from_code("golden", Label::Unlabeled, &GOLDEN);
        let ops: Vec<&str> = g.nodes.iter().map(|n| n.op.as_str()).collect();
        assert_eq!(ops, ["CONST", "CONST", "ADD", "CONST", "ADD", "JUMP"]);
        let add = g.node_by_pc(4).unwrap().id;
        let data_out: Vec<_> = g.edges_of(Relation::Data).filter(|e| e.src == add).collect();
        assert_eq!(data_out.len(), 2);
        assert!(data_out.iter().any(|e| g.nodes[e.dst].pc == 0));
        assert!(data_out.iter().any(|e| g.nodes[e.dst].pc == 2));
        g.validate().unwrap();
    }

    #[test]
    fn empty_code_empty_graph() {
        let g = build_srg_from_code("e", Label::Benign, &[]);
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
    }

    #[test]
    fn stack_ops_leave_no_nodes() {
        // PUSH1 1 PUSH1 2 SWAP3 DUP1 POP JUMPDEST STOP
        let g = build_srg_from_code("s", Label::Unlabeled, &[0x60, 0x01, 0x60, 0x02, 0x92, 0x80, 0x50, 0x5b, 0x00]);
        let ops: Vec<&str> = g.nodes.iter().map(|n| n.op.as_str()).collect();
        assert_eq!(ops, ["CONST", "CONST", "JUMPDEST", "STOP"]);
        assert!(g.nodes.iter().all(|n| !is_removed_opcode(&n.op)));
    }

    #[test]
    fn validate_catches_bad_edges() {
        let mut g = build_srg_from_code("l", Label::Unlabeled, &GOLDEN);
        g.edges.push(TypedEdge::new(0, 99, Relation::Control));
        assert!(matches!(g.validate(), Err(InvariantViolation::EdgeRange(_))));
        g.edges.pop();
        g.edges.push(TypedEdge::new(1, 1, Relation::Data));
        assert!(matches!(g.validate(), Err(InvariantViolation::DataSelfLoop(_))));
    }

    #[test]
    fn deterministic() {
        let code: Vec<u8> = (0..2000u32).map(|i| (i.wrapping_mul(2654435761) >> 13) as u8).collect();
        let a = build_srg_from_code("r", Label::Aec, &code);
        let b = build_srg_from_code("r", Label::Aec, &code);
        assert_eq!(a, b);
        a.validate().unwrap();
    }
}
