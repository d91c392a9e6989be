// SPDX-License-Identifier: Apache-2.0

use std::ffi::{CStr, CString};
use std::ptr;

use srgkit_ffi::*;

struct Graph(*mut SrgGraph);

impl Drop for Graph {
    fn drop(&mut self) {
        unsafe { srg_graph_free(self.0) }
    }
}

fn build(hex: &str) -> Graph {
    let hex = CString::new(hex).unwrap();
    let mut g = ptr::null_mut();
    let s = unsafe { srg_build_from_hex(c"api".as_ptr(), SRG_LABEL_BENIGN, hex.as_ptr(), &mut g) };
    assert_eq!(s, SrgStatus::Ok);
    Graph(g)
}

fn take(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { srg_string_free(p) };
    s
}

// PUSH1 1 PUSH1 0 SSTORE PUSH1 0 SLOAD STOP
const CODE: &str = "600160005560005400";

#[test]
fn bytes_and_hex_agree_with_core() {
    let code = hex::decode(CODE).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { srg_build_from_bytes(c"api".as_ptr(), SRG_LABEL_BENIGN, code.as_ptr(), code.len(), &mut g) }, SrgStatus::Ok);
    let a = Graph(g);
    let b = build(CODE);
    let core = srgkit::build_srg_from_code("api", srgkit::Label::Benign, &code);
    let json = |g: &Graph| {
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { srg_graph_to_json(g.0, &mut out) }, SrgStatus::Ok);
        take(out)
    };
    assert_eq!(json(&a), json(&b));
    assert_eq!(json(&a).as_bytes(), srgkit::to_json(&core));
}

#[test]
fn nodes_and_edges() {
    let g = build(CODE);
    let n = unsafe { srg_graph_node_count(g.0) };
    let m = unsafe { srg_graph_edge_count(g.0) };
    assert_eq!(n, 6);
    let mut ops = Vec::new();
    for i in 0..n {
        let (mut pc, mut op) = (0u64, ptr::null_mut());
        assert_eq!(unsafe { srg_graph_node(g.0, i, &mut pc, &mut op) }, SrgStatus::Ok);
        ops.push((pc, take(op)));
    }
    assert_eq!(ops[2], (4, "SSTORE".to_string()));
    let mut effect = 0;
    for i in 0..m {
        let mut e = SrgEdge { src: 0, dst: 0, relation: 9 };
        assert_eq!(unsafe { srg_graph_edge(g.0, i, &mut e) }, SrgStatus::Ok);
        assert!(e.src < n && e.dst < n && e.relation <= SRG_RELATION_EFFECT);
        if e.relation == SRG_RELATION_EFFECT {
            effect += 1;
            assert_eq!((ops[e.src].1.as_str(), ops[e.dst].1.as_str()), ("SLOAD", "SSTORE"));
        }
    }
    assert_eq!(effect, 1);
    let mut e = SrgEdge { src: 0, dst: 0, relation: 0 };
    assert_eq!(unsafe { srg_graph_edge(g.0, m, &mut e) }, SrgStatus::OutOfRange);
    let mut pc = 0;
    assert_eq!(unsafe { srg_graph_node(g.0, n, &mut pc, ptr::null_mut()) }, SrgStatus::OutOfRange);
}

#[test]
fn inject_encode_and_dot() {
    let g = build(CODE);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { srg_inject_nodes(g.0, 40.0, 2, 9, &mut p) }, SrgStatus::Ok);
    let p = Graph(p);
    let (n, m) = unsafe { (srg_graph_node_count(g.0), srg_graph_edge_count(g.0)) };
    assert_eq!(unsafe { srg_graph_node_count(p.0) }, n + 2);
    assert_eq!(unsafe { srg_graph_edge_count(p.0) }, m + 4);

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { srg_inject_nodes(g.0, 0.0, 2, 9, &mut bad) }, SrgStatus::InvalidArgument);
    assert_eq!(unsafe { srg_inject_nodes(g.0, f64::NAN, 2, 9, &mut bad) }, SrgStatus::InvalidArgument);
    assert_eq!(unsafe { srg_inject_nodes(g.0, 10.0, 0, 9, &mut bad) }, SrgStatus::InvalidArgument);
    assert!(bad.is_null());

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { srg_graph_encode_json(p.0, &mut out) }, SrgStatus::Ok);
    let enc: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(enc["vocab_version"].as_u64(), Some(srg_vocab_version() as u64));
    assert_eq!(enc["node_features"].as_array().unwrap().len(), n + 2);

    assert_eq!(unsafe { srg_graph_to_dot(g.0, true, &mut out) }, SrgStatus::Ok);
    assert!(take(out).starts_with("digraph"));
}

#[test]
fn json_errors_are_reported() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { srg_graph_from_json(c"{\"nodes\": 3}".as_ptr(), &mut g) }, SrgStatus::InvalidJson);
    assert!(g.is_null());
    let msg = unsafe { CStr::from_ptr(srg_last_error_message()) }.to_str().unwrap().to_string();
    assert!(!msg.is_empty());
    let invalid = [0xffu8, 0];
    assert_eq!(unsafe { srg_graph_from_json(invalid.as_ptr().cast(), &mut g) }, SrgStatus::InvalidUtf8);
    assert_eq!(unsafe { srg_graph_node_count(ptr::null()) }, 0);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { srg_graph_to_json(ptr::null(), &mut out) }, SrgStatus::NullPointer);
    unsafe {
        srg_graph_free(ptr::null_mut());
        srg_string_free(ptr::null_mut());
    }
}
