// SPDX-License-Identifier: Apache-2.0

//! EVM bytecode to Semantic Relation Graph toolkit.
//!
//! Pipeline: [`ingest`] bytecode, [`disasm`] it, [`lifter`] lifts it to
//! single-assignment RTL with resolved jumps, [`srg`] builds the typed
//! control/data/effect graph, [`graphio`] serializes and encodes it and
//! [`perturb`] runs the robustness attacks.

pub mod cli;
pub mod disasm;
pub mod graphio;
pub mod ingest;
pub mod label;
pub mod lifter;
pub mod perturb;
pub mod srg;

pub use disasm::{disassemble, Instruction, Opcode};
pub use graphio::{encode, from_json, to_dot, to_json, vocab, EncodedGraph, SplitPlan};
pub use ingest::{ContractRecord, DatasetManifest};
pub use label::Label;
pub use lifter::{lift, LiftedProgram, RtlStatement};
pub use srg::{build_srg, build_srg_from_code, graph_stats, Relation, Srg};
