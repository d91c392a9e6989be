// SPDX-License-Identifier: Apache-2.0

//! SRG serialization, learning-ready encoding, DOT export and dataset
//! splits.

mod dot;
mod encode;
mod splits;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::Label;
use crate::srg::{Diagnostics, Relation, SemanticNode, Srg, TypedEdge};

pub use dot::{parse_explanation, to_dot, DotOptions, Explanation, HighlightError};
pub use encode::{encode, vocab, EncodeError, EncodedGraph, Incidence, VOCAB_VERSION};
pub use splits::{make_splits, Assignment, SplitEntry, SplitError, SplitPlan, SplitStrategy, SplitTarget};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("schema error at {path}: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { path: path.into(), message: message.into() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeJson<'a> {
    id: usize,
    pc: u64,
    #[serde(borrow)]
    op: std::borrow::Cow<'a, str>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeJson {
    src: usize,
    dst: usize,
    rel: Relation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SrgJson<'a> {
    #[serde(borrow)]
    contract_id: std::borrow::Cow<'a, str>,
    label: Label,
    #[serde(borrow)]
    nodes: Vec<NodeJson<'a>>,
    edges: Vec<EdgeJson>,
    diagnostics: Diagnostics,
    vocab_version: u32,
}

pub fn to_json(g: &Srg) -> Vec<u8> {
    let doc = SrgJson {
        contract_id: g.contract_id.as_str().into(),
        label: g.label,
        nodes: g.nodes.iter().map(|n| NodeJson { id: n.id, pc: n.pc, op: n.op.as_str().into() }).collect(),
        edges: g.edges.iter().map(|e| EdgeJson { src: e.src, dst: e.dst, rel: e.relation }).collect(),
        diagnostics: g.diagnostics,
        vocab_version: VOCAB_VERSION,
    };
    serde_json::to_vec(&doc).expect("SRG serialization cannot fail")
}

/// Parses and validates an SRG document. Errors carry the JSON path of the
/// offending field.
pub fn from_json(bytes: &[u8]) -> Result<Srg, SchemaError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: SrgJson = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::at(path, e.into_inner().to_string())
    })?;
    if doc.vocab_version != VOCAB_VERSION {
        return Err(SchemaError::at("vocab_version", format!("unsupported version {}", doc.vocab_version)));
    }
    let n = doc.nodes.len();
    for (i, node) in doc.nodes.iter().enumerate() {
        if node.id != i {
            return Err(SchemaError::at(format!("nodes[{i}].id"), format!("expected {i}, got {}", node.id)));
        }
    }
    for (i, e) in doc.edges.iter().enumerate() {
        for (field, v) in [("src", e.src), ("dst", e.dst)] {
            if v >= n {
                return Err(SchemaError::at(format!("edges[{i}].{field}"), format!("node {v} out of range for {n} nodes")));
            }
        }
    }
    let g = Srg {
        contract_id: doc.contract_id.into_owned(),
        label: doc.label,
        nodes: doc.nodes.into_iter().map(|n| SemanticNode { id: n.id, pc: n.pc, op: n.op.into_owned() }).collect(),
        edges: doc.edges.into_iter().map(|e| TypedEdge::new(e.src, e.dst, e.rel)).collect(),
        diagnostics: doc.diagnostics,
    };
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srg::build_srg_from_code;

    fn sample() -> Srg {
        build_srg_from_code("0xabc", Label::Aec, &[0x60, 0x80, 0x60, 0x40, 0x52, 0x60, 0x40, 0x51, 0x56])
    }

    #[test]
    fn round_trip() {
        let g = sample();
        assert_eq!(from_json(&to_json(&g)).unwrap(), g);
    }

    #[test]
    fn field_names() {
        let v: serde_json::Value = serde_json::from_slice(&to_json(&sample())).unwrap();
        for k in ["contract_id", "label", "nodes", "edges", "diagnostics", "vocab_version"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["label"], 1);
        assert!(v["edges"][0]["rel"].is_string());
        assert!(v["diagnostics"]["unresolved_jumps"].is_u64());
    }

    #[test]
    fn truncated_document() {
        let bytes = to_json(&sample());
        assert!(from_json(&bytes[..bytes.len() / 2]).is_err());
    }

    #[test]
    fn dangling_edge() {
        let doc = serde_json::json!({
            "contract_id": "x", "label": null,
            "nodes": (0..10).map(|i| serde_json::json!({"id": i, "pc": i, "op": "STOP"})).collect::<Vec<_>>(),
            "edges": [{"src": 0, "dst": 999, "rel": "data"}],
            "diagnostics": {"unresolved_jumps": 0, "stack_underflows": 0},
            "vocab_version": VOCAB_VERSION,
        });
        let err = from_json(doc.to_string().as_bytes()).unwrap_err();
        assert_eq!(err.path, "edges[0].dst");
    }

    #[test]
    fn bad_relation_reports_path() {
        let doc = r#"{"contract_id":"x","label":0,"nodes":[{"id":0,"pc":0,"op":"STOP"}],
            "edges":[{"src":0,"dst":0,"rel":"ctrl"}],"diagnostics":{"unresolved_jumps":0,"stack_underflows":0},"vocab_version":1}"#;
        let err = from_json(doc.as_bytes()).unwrap_err();
        assert_eq!(err.path, "edges[0].rel");
    }
}
