// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::srg::{Relation, Srg};

const ORANGE: &str = "orange";

/// Per-graph explanation record produced by the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub contract_id: String,
    #[serde(default)]
    pub p_g: Option<f64>,
    #[serde(default)]
    pub p_s: Option<f64>,
    #[serde(default)]
    pub p_r: Option<f64>,
    pub factual_edges: Vec<usize>,
    #[serde(default)]
    pub counterfactual_edges: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HighlightError {
    #[error("explanation is for {found:?}, graph is {expected:?}")]
    ContractMismatch { expected: String, found: String },
    #[error("highlighted edge {index} does not exist ({edges} edges)")]
    EdgeOutOfRange { index: usize, edges: usize },
    #[error("malformed explanation: {0}")]
    Malformed(String),
}

pub fn parse_explanation(bytes: &[u8]) -> Result<Explanation, HighlightError> {
    serde_json::from_slice(bytes).map_err(|e| HighlightError::Malformed(e.to_string()))
}

impl Explanation {
    /// Factual edge indices, checked against `g`.
    pub fn highlight_for(&self, g: &Srg) -> Result<BTreeSet<usize>, HighlightError> {
        if self.contract_id != g.contract_id {
            return Err(HighlightError::ContractMismatch { expected: g.contract_id.clone(), found: self.contract_id.clone() });
        }
        let edges = g.edges.len();
        self.factual_edges
            .iter()
            .map(|&index| if index < edges { Ok(index) } else { Err(HighlightError::EdgeOutOfRange { index, edges }) })
            .collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct DotOptions {
    /// Edge indices drawn in orange, together with their endpoints.
    pub highlight: BTreeSet<usize>,
    /// Node ids added by an injection attack.
    pub injected: BTreeSet<usize>,
    /// Draw edges dependency -> dependent instead of the stored direction.
    pub reversed: bool,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn relation_color(r: Relation) -> &'static str {
    match r {
        Relation::Control => "blue",
        Relation::Data => "black",
        Relation::Effect => "purple",
    }
}

pub fn to_dot(g: &Srg, opts: &DotOptions) -> String {
    let mut hot_nodes = BTreeSet::new();
    for &i in &opts.highlight {
        if let Some(e) = g.edges.get(i) {
            hot_nodes.insert(e.src);
            hot_nodes.insert(e.dst);
        }
    }
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(&g.contract_id)).unwrap();
    out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    for n in &g.nodes {
        let hot = hot_nodes.contains(&n.id);
        let color = if opts.injected.contains(&n.id) {
            Some(if hot { "red" } else { "green" })
        } else if hot {
            Some(ORANGE)
        } else {
            None
        };
        write!(out, "  n{} [label=\"0x{:x}:{}\"", n.id, n.pc, escape(&n.op)).unwrap();
        if let Some(c) = color {
            write!(out, ", color={c}, style=filled, fillcolor={c}").unwrap();
        }
        out.push_str("];\n");
    }
    for (i, e) in g.edges.iter().enumerate() {
        let (a, b) = if opts.reversed { (e.dst, e.src) } else { (e.src, e.dst) };
        let color = if opts.highlight.contains(&i) { ORANGE } else { relation_color(e.relation) };
        writeln!(out, "  n{a} -> n{b} [color={color}, label=\"{}\"];", e.relation).unwrap();
    }
    out.push_str("}\n");
    out
}
