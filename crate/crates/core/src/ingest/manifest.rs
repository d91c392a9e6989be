// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{hex_decode, Address, ContractRecord, FetchError, HexError, RpcClient};
use crate::label::Label;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: line {line}: {message}")]
    ParseError { path: PathBuf, line: usize, message: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{}: {err}", .path.display())]
    Read { path: PathBuf, err: io::Error },
    #[error("{}: {err}", .path.display())]
    Hex { path: PathBuf, err: HexError },
    #[error("{0}: empty bytecode")]
    EmptyBytecode(String),
    #[error("{0}: address requires an rpc endpoint (offline mode)")]
    Offline(String),
    #[error("{0}: {1}")]
    Fetch(String, FetchError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// As written in the manifest; relative paths resolve against the
    /// manifest's directory.
    Path(String),
    Address(Address),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub location: Location,
    pub label: Label,
    pub deployed_at: Option<DateTime<Utc>>,
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub records: Vec<ManifestEntry>,
    pub base_dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bytecode_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    address: Option<String>,
    #[serde(deserialize_with = "required_label")]
    label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deployed_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

/// `label` must be present even when null.
fn required_label<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Label, D::Error> {
    Label::deserialize(d)
}

impl Line {
    fn into_entry(self) -> Result<ManifestEntry, String> {
        let location = match (self.bytecode_path, self.address) {
            (Some(p), None) => Location::Path(p),
            (None, Some(a)) => Location::Address(a.parse().map_err(|e: super::AddressError| e.to_string())?),
            _ => return Err("exactly one of bytecode_path/address is required".into()),
        };
        Ok(ManifestEntry { id: self.id, location, label: self.label, deployed_at: self.deployed_at, source: self.source })
    }

    fn from_entry(e: &ManifestEntry) -> Self {
        let (bytecode_path, address) = match &e.location {
            Location::Path(p) => (Some(p.clone()), None),
            Location::Address(a) => (None, Some(a.to_string())),
        };
        Line { id: e.id.clone(), bytecode_path, address, label: e.label, deployed_at: e.deployed_at, source: e.source.clone() }
    }
}

#[derive(Deserialize)]
struct CsvRow {
    id: String,
    #[serde(default)]
    bytecode_path: String,
    #[serde(default)]
    address: String,
    #[serde(default)]
    label: String,
    #[serde(default)]
    deployed_at: String,
    #[serde(default)]
    source: String,
}

fn non_empty(s: String) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve_path(&self, p: &str) -> PathBuf {
        self.base_dir.join(p)
    }

    fn validate(&self) -> Result<(), ManifestError> {
        let mut ids = HashSet::new();
        for r in &self.records {
            if !ids.insert(r.id.as_str()) {
                return Err(ManifestError::DuplicateId(r.id.clone()));
            }
            if let Location::Path(p) = &r.location {
                let full = self.resolve_path(p);
                if !full.is_file() {
                    return Err(ManifestError::MissingFile(full));
                }
            }
        }
        Ok(())
    }

    /// Converts a CSV file with the manifest's column names into a manifest.
    /// An empty `label` cell means unlabeled.
    pub fn from_csv(path: &Path) -> Result<Self, ManifestError> {
        if !path.is_file() {
            return Err(ManifestError::MissingFile(path.to_path_buf()));
        }
        let parse_err = |line: usize, message: String| ManifestError::ParseError { path: path.to_path_buf(), line, message };
        let mut rdr = csv::Reader::from_path(path).map_err(|e| parse_err(0, e.to_string()))?;
        let mut records = Vec::new();
        for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| parse_err(line, e.to_string()))?;
            let label = match row.label.trim() {
                "" | "null" => Label::Unlabeled,
                "0" => Label::Benign,
                "1" => Label::Aec,
                other => return Err(parse_err(line, format!("label must be 0, 1 or empty, got {other}"))),
            };
            let deployed_at = match non_empty(row.deployed_at) {
                Some(t) => Some(t.parse::<DateTime<Utc>>().map_err(|e| parse_err(line, e.to_string()))?),
                None => None,
            };
            let l = Line {
                id: row.id,
                bytecode_path: non_empty(row.bytecode_path),
                address: non_empty(row.address),
                label,
                deployed_at,
                source: non_empty(row.source),
            };
            records.push(l.into_entry().map_err(|m| parse_err(line, m))?);
        }
        let m = DatasetManifest { records, base_dir: parent_dir(path) };
        m.validate()?;
        Ok(m)
    }

    /// Loads one record's bytecode. Address records need `rpc`.
    pub fn load_record(&self, entry: &ManifestEntry, rpc: Option<&RpcClient>) -> Result<ContractRecord, RecordError> {
        let bytecode = match &entry.location {
            Location::Path(p) => {
                let full = self.resolve_path(p);
                let text = fs::read_to_string(&full).map_err(|e| RecordError::Read { path: full.clone(), err: e })?;
                hex_decode(&text).map_err(|e| RecordError::Hex { path: full, err: e })?
            }
            Location::Address(a) => {
                let client = rpc.ok_or_else(|| RecordError::Offline(entry.id.clone()))?;
                client.get_code(a).map_err(|e| RecordError::Fetch(entry.id.clone(), e))?
            }
        };
        if bytecode.is_empty() {
            return Err(RecordError::EmptyBytecode(entry.id.clone()));
        }
        let source = entry.source.clone().unwrap_or_else(|| match entry.location {
            Location::Path(_) => "file".into(),
            Location::Address(_) => "rpc".into(),
        });
        Ok(ContractRecord { id: entry.id.clone(), bytecode, label: entry.label, deployed_at: entry.deployed_at, source })
    }

    /// Loads every record on the current rayon pool, in manifest order.
    pub fn load_records(&self, rpc: Option<&RpcClient>) -> Vec<Result<ContractRecord, RecordError>> {
        self.records.par_iter().map(|e| self.load_record(e, rpc)).collect()
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Reads a JSONL manifest. Blank lines are skipped.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest, ManifestError> {
    if !path.is_file() {
        return Err(ManifestError::MissingFile(path.to_path_buf()));
    }
    let file = fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| ManifestError::ParseError { path: path.to_path_buf(), line: i + 1, message };
        let l: Line = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        records.push(l.into_entry().map_err(err)?);
    }
    let m = DatasetManifest { records, base_dir: parent_dir(path) };
    m.validate()?;
    Ok(m)
}

pub fn save_manifest(m: &DatasetManifest, path: &Path) -> Result<(), ManifestError> {
    let dir = parent_dir(path);
    let mut tmp = tempfile::NamedTempFile::new_in(if dir.as_os_str().is_empty() { Path::new(".") } else { &dir })?;
    for r in &m.records {
        serde_json::to_writer(&mut tmp, &Line::from_entry(r)).map_err(io::Error::from)?;
        tmp.write_all(b"\n")?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
