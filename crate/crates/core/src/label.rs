// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

/// Ground-truth class of a contract. Serialized as `0`, `1` or `null`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Option<u8>", into = "Option<u8>")]
pub enum Label {
    Benign,
    Aec,
    #[default]
    Unlabeled,
}

impl Label {
    pub fn as_bit(self) -> Option<u8> {
        match self {
            Label::Benign => Some(0),
            Label::Aec => Some(1),
            Label::Unlabeled => None,
        }
    }

    /// Benign <-> Aec; unlabeled stays unlabeled.
    pub fn flipped(self) -> Label {
        match self {
            Label::Benign => Label::Aec,
            Label::Aec => Label::Benign,
            Label::Unlabeled => Label::Unlabeled,
        }
    }
}

impl TryFrom<Option<u8>> for Label {
    type Error = String;

    fn try_from(v: Option<u8>) -> Result<Self, Self::Error> {
        match v {
            None => Ok(Label::Unlabeled),
            Some(0) => Ok(Label::Benign),
            Some(1) => Ok(Label::Aec),
            Some(n) => Err(format!("label must be 0, 1 or null, got {n}")),
        }
    }
}

impl From<Label> for Option<u8> {
    fn from(l: Label) -> Self {
        l.as_bit()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Benign => "benign",
            Label::Aec => "aec",
            Label::Unlabeled => "unlabeled",
        })
    }
}
