// SPDX-License-Identifier: Apache-2.0

//! Bytecode acquisition: hex files, JSONL dataset manifests and a JSON-RPC
//! node.

mod hex;
mod manifest;
mod rpc;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::label::Label;

pub use self::hex::{hex_decode, hex_encode, HexError};
pub use manifest::{load_manifest, save_manifest, DatasetManifest, Location, ManifestEntry, ManifestError, RecordError};
pub use rpc::{fetch_bytecode, fetch_transaction, FetchError, RpcClient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub [u8; 20]);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid address {0:?}: expected 40 hex digits")]
pub struct AddressError(pub String);

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }
}

impl FromStr for Address {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || AddressError(s.to_string());
        let t = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        if t.len() != 40 {
            return Err(err());
        }
        let mut out = [0u8; 20];
        ::hex::decode_to_slice(t, &mut out).map_err(|_| err())?;
        Ok(Address(out))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", ::hex::encode(self.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionStub {
    pub hash: [u8; 32],
    pub to: Option<Address>,
    pub input: Vec<u8>,
}

/// A transaction creates a contract when it has no recipient (or the zero
/// address as recipient).
pub fn detect_creation(tx: &TransactionStub) -> bool {
    tx.to.is_none_or(|a| a.is_zero())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractRecord {
    pub id: String,
    pub bytecode: Vec<u8>,
    pub label: Label,
    pub deployed_at: Option<DateTime<Utc>>,
    pub source: String,
}
