// SPDX-License-Identifier: Apache-2.0

//! Robustness attacks: node injection, label flipping and random edge
//! flips.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::Label;
use crate::srg::{Relation, SemanticNode, Srg, TypedEdge};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid attack {spec:?}: {reason}")]
pub struct AttackParseError {
    pub spec: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttackKind {
    Gia { k_pct: f64, m_edges: usize },
    Lfa { k_pct: f64 },
    EdgeFlip { k_pct: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub seed: u64,
}

impl FromStr for AttackKind {
    type Err = AttackParseError;

    /// `gia:K:M`, `lfa:K` or `edgeflip:K`, with K in (0, 100] and M >= 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| AttackParseError { spec: s.to_string(), reason: reason.to_string() };
        let parts: Vec<&str> = s.split(':').collect();
        let pct = |t: &str| -> Result<f64, AttackParseError> {
            let k: f64 = t.parse().map_err(|_| err("K is not a number"))?;
            if k > 0.0 && k <= 100.0 {
                Ok(k)
            } else {
                Err(err("K must be in (0, 100]"))
            }
        };
        match parts.as_slice() {
            ["gia", k, m] => {
                let m: usize = m.parse().map_err(|_| err("M is not an integer"))?;
                if m == 0 {
                    return Err(err("M must be at least 1"));
                }
                Ok(AttackKind::Gia { k_pct: pct(k)?, m_edges: m })
            }
            ["lfa", k] => Ok(AttackKind::Lfa { k_pct: pct(k)? }),
            ["edgeflip", k] => Ok(AttackKind::EdgeFlip { k_pct: pct(k)? }),
            _ => Err(err("expected gia:K:M, lfa:K or edgeflip:K")),
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackKind::Gia { k_pct, m_edges } => write!(f, "gia:{k_pct}:{m_edges}"),
            AttackKind::Lfa { k_pct } => write!(f, "lfa:{k_pct}"),
            AttackKind::EdgeFlip { k_pct } => write!(f, "edgeflip:{k_pct}"),
        }
    }
}

fn pct_count(n: usize, k_pct: f64) -> usize {
    (n as f64 * k_pct / 100.0).round() as usize
}

/// Mixes a run seed with a graph id (FNV-1a) so every graph of a batch gets
/// its own stream regardless of processing order.
pub fn derive_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ seed.rotate_left(32)
}

fn relation_of(x: u32) -> Relation {
    Relation::ALL[x as usize % 3]
}

/// Adds `round(|V| k / 100)` nodes after the original ones. Each copies the
/// opcode of a uniformly chosen original node, gets a pc above every
/// existing pc, and points to `m_edges` distinct original nodes (clamped to
/// `|V|`) with uniformly drawn relations. Original nodes and edges keep
/// their ids and order.
pub fn inject_nodes(g: &Srg, k_pct: f64, m_edges: usize, seed: u64) -> Srg {
    let n = g.nodes.len();
    let count = pct_count(n, k_pct);
    let mut out = g.clone();
    if count == 0 || n == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = m_edges.min(n);
    let base_pc = g.nodes.iter().map(|x| x.pc).max().unwrap_or(0) + 1;
    for i in 0..count {
        let id = n + i;
        let op = g.nodes[rng.gen_range(0..n)].op.clone();
        out.nodes.push(SemanticNode { id, pc: base_pc + i as u64, op });
        let mut targets: Vec<usize> = sample(&mut rng, n, m).into_vec();
        targets.sort_unstable();
        for t in targets {
            out.edges.push(TypedEdge::new(id, t, relation_of(rng.gen_range(0..3))));
        }
    }
    out
}

/// Node ids added by [`inject_nodes`] on top of an `original_nodes`-node graph.
pub fn injected_ids(original_nodes: usize, perturbed: &Srg) -> BTreeSet<usize> {
    (original_nodes..perturbed.nodes.len()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelFlip {
    pub labels: BTreeMap<String, Label>,
    pub flipped: Vec<String>,
}

/// Flips exactly `round(n k / 100)` of the labeled training entries, chosen
/// uniformly. Unlabeled entries are kept and never counted.
pub fn flip_labels(train: &[(String, Label)], k_pct: f64, seed: u64) -> LabelFlip {
    let mut labels: BTreeMap<String, Label> = train.iter().cloned().collect();
    let candidates: Vec<String> =
        labels.iter().filter(|(_, l)| **l != Label::Unlabeled).map(|(id, _)| id.clone()).collect();
    let count = pct_count(candidates.len(), k_pct).min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flipped: Vec<String> = sample(&mut rng, candidates.len(), count).into_iter().map(|i| candidates[i].clone()).collect();
    flipped.sort();
    for id in &flipped {
        let l = labels.get_mut(id).expect("candidate comes from labels");
        *l = l.flipped();
    }
    LabelFlip { labels, flipped }
}

/// Removes or inserts `round(|E| k / 100)` edges in total; each modification
/// is a removal or an insertion with probability 1/2. Insertions use
/// distinct endpoints, a uniform relation and never duplicate an edge.
/// Nodes are never touched. When the graph cannot take more edges the
/// remaining modifications become removals.
pub fn flip_edges(g: &Srg, k_pct: f64, seed: u64) -> Srg {
    let total = pct_count(g.edges.len(), k_pct);
    let mut out = g.clone();
    if total == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.nodes.len();
    let mut removals = (0..total).filter(|_| rng.gen_bool(0.5)).count();
    let mut existing: BTreeSet<TypedEdge> = g.edges.iter().copied().collect();
    let capacity = (n * n.saturating_sub(1) * 3).saturating_sub(existing.iter().filter(|e| e.src != e.dst).count());
    let mut insertions = total - removals;
    if insertions > capacity {
        removals += insertions - capacity;
        insertions = capacity;
    }
    let removals = removals.min(g.edges.len());
    let removed: BTreeSet<usize> = sample(&mut rng, g.edges.len(), removals).into_iter().collect();
    out.edges = g.edges.iter().enumerate().filter(|(i, _)| !removed.contains(i)).map(|(_, e)| *e).collect();
    let mut added = 0;
    while added < insertions {
        let src = rng.gen_range(0..n);
        let dst = rng.gen_range(0..n);
        if src == dst {
            continue;
        }
        let e = TypedEdge::new(src, dst, relation_of(rng.gen_range(0..3)));
        if existing.insert(e) {
            out.edges.push(e);
            added += 1;
        }
    }
    out
}
