// SPDX-License-Identifier: Apache-2.0

//! C ABI over `srgkit`.
//!
//! Graphs are opaque `SrgGraph` handles released with `srg_graph_free`.
//! Every fallible call returns an `SrgStatus`; on failure a description is
//! available from `srg_last_error_message` on the same thread. Strings
//! handed out by the library must be released with `srg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use srgkit::graphio::{self, DotOptions, VOCAB_VERSION};
use srgkit::ingest::hex_decode;
use srgkit::label::Label;
use srgkit::perturb;
use srgkit::srg::{build_srg_from_code, Srg};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidHex = 3,
    InvalidJson = 4,
    InvalidArgument = 5,
    OutOfRange = 6,
    Internal = 7,
}

/// Edge relation codes, as in the `edge_type` of an encoded graph.
pub const SRG_RELATION_CONTROL: u8 = 0;
pub const SRG_RELATION_DATA: u8 = 1;
pub const SRG_RELATION_EFFECT: u8 = 2;

/// Label codes accepted by the build functions.
pub const SRG_LABEL_BENIGN: i32 = 0;
pub const SRG_LABEL_AEC: i32 = 1;
pub const SRG_LABEL_UNLABELED: i32 = -1;

/// Opaque graph handle.
pub struct SrgGraph {
    inner: Srg,
}

/// One typed edge: `src` depends on `dst`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SrgEdge {
    pub src: usize,
    pub dst: usize,
    pub relation: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: SrgStatus, msg: impl Into<String>) -> SrgStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `SrgStatus::Internal`.
fn guard(f: impl FnOnce() -> SrgStatus) -> SrgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let what = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SrgStatus::Internal, format!("internal error: {what}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, SrgStatus> {
    if p.is_null() {
        return Err(fail(SrgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(SrgStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn graph_arg<'a>(g: *const SrgGraph) -> Result<&'a Srg, SrgStatus> {
    g.as_ref().map(|g| &g.inner).ok_or_else(|| fail(SrgStatus::NullPointer, "graph is null"))
}

fn label_arg(label: i32) -> Result<Label, SrgStatus> {
    match label {
        SRG_LABEL_BENIGN => Ok(Label::Benign),
        SRG_LABEL_AEC => Ok(Label::Aec),
        SRG_LABEL_UNLABELED => Ok(Label::Unlabeled),
        n => Err(fail(SrgStatus::InvalidArgument, format!("label must be 0, 1 or -1, got {n}"))),
    }
}

unsafe fn put_graph(out: *mut *mut SrgGraph, g: Srg) -> SrgStatus {
    *out = Box::into_raw(Box::new(SrgGraph { inner: g }));
    SrgStatus::Ok
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> SrgStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            SrgStatus::Ok
        }
        Err(_) => fail(SrgStatus::Internal, "output contains a NUL byte"),
    }
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! out_ptr {
    ($out:expr) => {
        if $out.is_null() {
            return fail(SrgStatus::NullPointer, "output pointer is null");
        }
    };
}

/// Vocabulary version of the node feature encoding.
#[no_mangle]
pub extern "C" fn srg_vocab_version() -> u32 {
    VOCAB_VERSION
}

/// Builds a graph from raw runtime bytecode.
///
/// # Safety
/// `contract_id` must be a NUL-terminated string, `code` must point to
/// `len` readable bytes (or be null when `len` is 0) and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn srg_build_from_bytes(
    contract_id: *const c_char,
    label: i32,
    code: *const u8,
    len: usize,
    out: *mut *mut SrgGraph,
) -> SrgStatus {
    guard(|| {
        out_ptr!(out);
        let id = try_ffi!(str_arg(contract_id, "contract_id"));
        let label = try_ffi!(label_arg(label));
        let code: &[u8] = if len == 0 {
            &[]
        } else if code.is_null() {
            return fail(SrgStatus::NullPointer, "code is null");
        } else {
            std::slice::from_raw_parts(code, len)
        };
        put_graph(out, build_srg_from_code(id, label, code))
    })
}

/// Builds a graph from hex text, with or without a `0x` prefix.
///
/// # Safety
/// `contract_id` and `hex` must be NUL-terminated strings and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn srg_build_from_hex(
    contract_id: *const c_char,
    label: i32,
    hex: *const c_char,
    out: *mut *mut SrgGraph,
) -> SrgStatus {
    guard(|| {
        out_ptr!(out);
        let id = try_ffi!(str_arg(contract_id, "contract_id"));
        let label = try_ffi!(label_arg(label));
        let text = try_ffi!(str_arg(hex, "hex"));
        match hex_decode(text) {
            Ok(code) => put_graph(out, build_srg_from_code(id, label, &code)),
            Err(e) => fail(SrgStatus::InvalidHex, e.to_string()),
        }
    })
}

/// Parses a graph from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_from_json(json: *const c_char, out: *mut *mut SrgGraph) -> SrgStatus {
    guard(|| {
        out_ptr!(out);
        let text = try_ffi!(str_arg(json, "json"));
        match graphio::from_json(text.as_bytes()) {
            Ok(g) => put_graph(out, g),
            Err(e) => fail(SrgStatus::InvalidJson, e.to_string()),
        }
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_free(g: *mut SrgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_node_count(g: *const SrgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.node_count())
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_edge_count(g: *const SrgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// Reads edge `index`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_edge(g: *const SrgGraph, index: usize, out: *mut SrgEdge) -> SrgStatus {
    guard(|| {
        out_ptr!(out);
        let g = try_ffi!(graph_arg(g));
        let Some(e) = g.edges.get(index) else {
            return fail(SrgStatus::OutOfRange, format!("edge {index} of {}", g.edges.len()));
        };
        *out = SrgEdge { src: e.src, dst: e.dst, relation: e.relation.index() as u8 };
        SrgStatus::Ok
    })
}

/// Reads the program counter and opcode name of node `index`. The name is
/// a new string for `srg_string_free`; pass null to skip it.
///
/// # Safety
/// `g` must be a live handle, `pc` writable, `op` null or writable.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_node(g: *const SrgGraph, index: usize, pc: *mut u64, op: *mut *mut c_char) -> SrgStatus {
    guard(|| {
        out_ptr!(pc);
        let g = try_ffi!(graph_arg(g));
        let Some(n) = g.nodes.get(index) else {
            return fail(SrgStatus::OutOfRange, format!("node {index} of {}", g.nodes.len()));
        };
        *pc = n.pc;
        if op.is_null() {
            SrgStatus::Ok
        } else {
            put_string(op, n.op.clone())
        }
    })
}

/// Serializes a graph to JSON.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_to_json(g: *const SrgGraph, out: *mut *mut c_char) -> SrgStatus {
    guard(|| {
        out_ptr!(out);
        let g = try_ffi!(graph_arg(g));
        put_string(out, String::from_utf8(graphio::to_json(g)).expect("JSON is UTF-8"))
    })
}

/// Serializes the learning-ready encoding of a graph to JSON.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_encode_json(g: *const SrgGraph, out: *mut *mut c_char) -> SrgStatus {
    guard(|| {
        out_ptr!(out);
        let g = try_ffi!(graph_arg(g));
        match graphio::encode(g, graphio::vocab()) {
            Ok(enc) => put_string(out, serde_json::to_string(&enc).expect("serializable")),
            Err(e) => fail(SrgStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Renders a graph as Graphviz DOT.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srg_graph_to_dot(g: *const SrgGraph, reversed: bool, out: *mut *mut c_char) -> SrgStatus {
    guard(|| {
        out_ptr!(out);
        let g = try_ffi!(graph_arg(g));
        let opts = DotOptions { reversed, ..DotOptions::default() };
        put_string(out, graphio::to_dot(g, &opts))
    })
}

/// Injects `round(nodes * k_pct / 100)` nodes with `m_edges` edges each
/// into a copy of `g`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn srg_inject_nodes(
    g: *const SrgGraph,
    k_pct: f64,
    m_edges: usize,
    seed: u64,
    out: *mut *mut SrgGraph,
) -> SrgStatus {
    guard(|| {
        out_ptr!(out);
        let g = try_ffi!(graph_arg(g));
        if !(k_pct > 0.0 && k_pct <= 100.0) {
            return fail(SrgStatus::InvalidArgument, format!("k_pct must be in (0, 100], got {k_pct}"));
        }
        if m_edges == 0 {
            return fail(SrgStatus::InvalidArgument, "m_edges must be at least 1");
        }
        put_graph(out, perturb::inject_nodes(g, k_pct, m_edges, seed))
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn srg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
