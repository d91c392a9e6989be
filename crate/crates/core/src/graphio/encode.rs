// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disasm::defined_opcodes;
use crate::srg::Srg;

/// Bumped whenever the vocabulary changes.
pub const VOCAB_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("opcode {0:?} is not in the vocabulary")]
    UnknownOpcode(String),
}

/// Node opcode vocabulary: every defined opcode that survives
/// simplification, in byte order, then `CONST`.
pub fn vocab() -> &'static [&'static str] {
    static VOCAB: OnceLock<Vec<&'static str>> = OnceLock::new();
    VOCAB.get_or_init(|| {
        let mut v: Vec<&'static str> =
            defined_opcodes().filter(|o| !o.is_stack_manipulation()).map(|o| o.name).collect();
        v.push("CONST");
        v
    })
}

/// Sparse `|E| x |V|` edge/node incidence in coordinate form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    pub shape: [usize; 2],
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

impl Incidence {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.shape[0]];
        for (r, v) in self.rows.iter().zip(&self.values) {
            s[*r] += v;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedGraph {
    pub contract_id: String,
    pub vocab_version: u32,
    /// `|V| x |vocab|`, one 1 per row.
    pub node_features: Vec<Vec<u8>>,
    /// `[sources, destinations]`.
    pub edge_index: [Vec<usize>; 2],
    /// 0 control, 1 data, 2 effect.
    pub edge_type: Vec<u8>,
    pub incidence: Incidence,
    pub label: Option<u8>,
}

pub fn encode(g: &Srg, vocab: &[&str]) -> Result<EncodedGraph, EncodeError> {
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, op)| (*op, i)).collect();
    let node_features = g
        .nodes
        .iter()
        .map(|n| {
            let col = *index.get(n.op.as_str()).ok_or_else(|| EncodeError::UnknownOpcode(n.op.clone()))?;
            let mut row = vec![0u8; vocab.len()];
            row[col] = 1;
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut incidence =
        Incidence { shape: [g.edges.len(), g.nodes.len()], rows: Vec::new(), cols: Vec::new(), values: Vec::new() };
    for (i, e) in g.edges.iter().enumerate() {
        if e.src == e.dst {
            incidence.rows.push(i);
            incidence.cols.push(e.src);
            incidence.values.push(1.0);
        } else {
            for c in [e.src, e.dst] {
                incidence.rows.push(i);
                incidence.cols.push(c);
                incidence.values.push(0.5);
            }
        }
    }
    Ok(EncodedGraph {
        contract_id: g.contract_id.clone(),
        vocab_version: VOCAB_VERSION,
        node_features,
        edge_index: [g.edges.iter().map(|e| e.src).collect(), g.edges.iter().map(|e| e.dst).collect()],
        edge_type: g.edges.iter().map(|e| e.relation.index() as u8).collect(),
        incidence,
        label: g.label.as_bit(),
    })
}
