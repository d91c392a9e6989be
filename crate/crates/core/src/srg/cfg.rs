// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::{Relation, TypedEdge};
use crate::lifter::{LiftedProgram, Terminator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CfgEdgeKind {
    Jump,
    Fallthrough,
}

/// Edge between two blocks, by block index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CfgEdge {
    pub from: usize,
    pub to: usize,
    pub kind: CfgEdgeKind,
}

/// Block-level control flow: one edge per resolved jump target, plus
/// fallthrough edges for JUMPI-false and blocks that run into a JUMPDEST.
pub fn build_cfg(lifted: &LiftedProgram) -> Vec<CfgEdge> {
    let mut out = BTreeSet::new();
    for (from, block) in lifted.blocks.iter().enumerate() {
        let (jumps, fall): (Vec<u64>, Option<u64>) = match &block.terminator {
            Terminator::Jump(t) => (t.iter().copied().collect(), None),
            Terminator::JumpI { targets, fallthrough } => (targets.iter().copied().collect(), *fallthrough),
            Terminator::Fallthrough(n) => (Vec::new(), Some(*n)),
            Terminator::Halt => (Vec::new(), None),
        };
        for pc in jumps {
            if let Some(to) = lifted.block_index(pc) {
                out.insert(CfgEdge { from, to, kind: CfgEdgeKind::Jump });
            }
        }
        if let Some(to) = fall.and_then(|pc| lifted.block_index(pc)) {
            out.insert(CfgEdge { from, to, kind: CfgEdgeKind::Fallthrough });
        }
    }
    out.into_iter().collect()
}

/// For each CFG edge `b_i -> b_j`, a Control edge from the entry node of
/// `b_j` (its JUMPDEST, else its first node) to the exit node of `b_i` (its
/// JUMP/JUMPI, else its last node). Blocks without nodes contribute nothing.
pub fn build_control_edges(lifted: &LiftedProgram, cfg: &[CfgEdge], node_of: &BTreeMap<u64, usize>) -> Vec<TypedEdge> {
    let first = |b: usize| lifted.blocks[b].statements.first().and_then(|s| node_of.get(&s.pc)).copied();
    let last = |b: usize| lifted.blocks[b].statements.last().and_then(|s| node_of.get(&s.pc)).copied();
    let mut out = BTreeSet::new();
    for e in cfg {
        if let (Some(dst_entry), Some(src_exit)) = (first(e.to), last(e.from)) {
            out.insert(TypedEdge::new(dst_entry, src_exit, Relation::Control));
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifter::lift;
    use crate::srg::simplify_nodes;

    fn control(code: &[u8]) -> (LiftedProgram, Vec<CfgEdge>, Vec<TypedEdge>, BTreeMap<u64, usize>) {
        let p = lift(code);
        let (_, node_of) = simplify_nodes(p.statements());
        let cfg = build_cfg(&p);
        let ctl = build_control_edges(&p, &cfg, &node_of);
        (p, cfg, ctl, node_of)
    }

    #[test]
    fn jumpi_edges_to_target_and_fallthrough() {
        // 00: CALLVALUE PUSH2 0x0109 JUMPI ; 05: STOP ; pad ; 0x109: JUMPDEST STOP
        let mut code = vec![0x34, 0x61, 0x01, 0x09, 0x57, 0x00];
        code.resize(0x109, 0x00);
        code.extend([0x5b, 0x00]);
        let (p, cfg, ctl, node_of) = control(&code);
        let dest = p.block_index(0x109).unwrap();
        assert!(cfg.contains(&CfgEdge { from: 0, to: dest, kind: CfgEdgeKind::Jump }));
        assert!(cfg.contains(&CfgEdge { from: 0, to: 1, kind: CfgEdgeKind::Fallthrough }));
        assert!(ctl.contains(&TypedEdge::new(node_of[&0x109], node_of[&4], Relation::Control)));
        assert!(ctl.contains(&TypedEdge::new(node_of[&5], node_of[&4], Relation::Control)));
    }

    #[test]
    fn halt_block_has_no_edges() {
        let (_, cfg, ctl, _) = control(&[0x00]);
        assert!(cfg.is_empty());
        assert!(ctl.is_empty());
    }

    #[test]
    fn self_loop_control_edge() {
        // 00: JUMPDEST PUSH1 0 JUMP
        let (_, cfg, ctl, node_of) = control(&[0x5b, 0x60, 0x00, 0x56]);
        assert_eq!(cfg, vec![CfgEdge { from: 0, to: 0, kind: CfgEdgeKind::Jump }]);
        assert_eq!(ctl, vec![TypedEdge::new(node_of[&0], node_of[&3], Relation::Control)]);
    }

    #[test]
    fn two_targets_after_join_give_two_edges() {
        // 00: CALLVALUE PUSH1 0x09 JUMPI
        // 04: PUSH1 0x0f PUSH1 0x0c JUMP     ; reach 0x0c with 0x0f on stack
        // 09: JUMPDEST PUSH1 0x11            ; falls into 0x0c with 0x11
        // 0c: JUMPDEST JUMP                  ; targets {0x0f, 0x11}
        // 0e: STOP
        // 0f: JUMPDEST STOP
        // 11: JUMPDEST STOP
        let code = [
            0x34, 0x60, 0x09, 0x57, 0x60, 0x0f, 0x60, 0x0c, 0x56, 0x5b, 0x60, 0x11, 0x5b, 0x56, 0x00,
            0x5b, 0x00, 0x5b, 0x00,
        ];
        let (p, cfg, _, _) = control(&code);
        let join = p.block_index(0x0c).unwrap();
        let out: Vec<_> = cfg.iter().filter(|e| e.from == join).collect();
        assert_eq!(out.len(), 2, "{:?}\n{}", cfg, p.rtl_dump());
    }
}
