// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ManifestEntry;
use crate::label::Label;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("{0}: no deployed_at timestamp")]
    MissingTimestamp(String),
    #[error("{0}: unlabeled")]
    MissingLabel(String),
    #[error("invalid split strategy {0:?}")]
    InvalidStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitStrategy {
    KFold { k: usize },
    /// Random `p` percent for training, the rest halved into val/test.
    Rand { p: f64 },
    /// Oldest `p` percent for training, then val, newest last in test.
    Old { p: f64 },
}

impl FromStr for SplitStrategy {
    type Err = SplitError;

    /// `kfold:K`, `rand:P` or `old:P`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SplitError::InvalidStrategy(s.to_string());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let strategy = match kind.to_ascii_lowercase().as_str() {
            "kfold" => SplitStrategy::KFold { k: arg.parse().map_err(|_| bad())? },
            "rand" => SplitStrategy::Rand { p: arg.parse().map_err(|_| bad())? },
            "old" => SplitStrategy::Old { p: arg.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        strategy.check().map_err(|_| bad())?;
        Ok(strategy)
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitStrategy::KFold { k } => write!(f, "kfold:{k}"),
            SplitStrategy::Rand { p } => write!(f, "rand:{p}"),
            SplitStrategy::Old { p } => write!(f, "old:{p}"),
        }
    }
}

impl SplitStrategy {
    fn check(&self) -> Result<(), SplitError> {
        let ok = match *self {
            SplitStrategy::KFold { k } => k >= 1,
            SplitStrategy::Rand { p } | SplitStrategy::Old { p } => p > 0.0 && p <= 100.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SplitError::InvalidStrategy(self.to_string()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTarget {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Assignment {
    Split(SplitTarget),
    Fold(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub strategy: SplitStrategy,
    pub seed: u64,
    pub assignments: BTreeMap<String, Assignment>,
}

impl SplitPlan {
    pub fn ids_in(&self, a: Assignment) -> Vec<&str> {
        self.assignments.iter().filter(|(_, v)| **v == a).map(|(k, _)| k.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitEntry {
    pub id: String,
    pub label: Label,
    pub deployed_at: Option<DateTime<Utc>>,
}

impl From<&ManifestEntry> for SplitEntry {
    fn from(e: &ManifestEntry) -> Self {
        SplitEntry { id: e.id.clone(), label: e.label, deployed_at: e.deployed_at }
    }
}

fn pct_count(n: usize, p: f64) -> usize {
    ((n as f64 * p / 100.0).round() as usize).min(n)
}

/// Seeded, reproducible split assignment.
pub fn make_splits(entries: &[SplitEntry], strategy: SplitStrategy, seed: u64) -> Result<SplitPlan, SplitError> {
    strategy.check()?;
    if let Some(e) = entries.iter().find(|e| e.label == Label::Unlabeled) {
        return Err(SplitError::MissingLabel(e.id.clone()));
    }
    let mut order: Vec<&SplitEntry> = entries.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    match strategy {
        SplitStrategy::KFold { k } => {
            order.shuffle(&mut rng);
            for (i, e) in order.iter().enumerate() {
                assignments.insert(e.id.clone(), Assignment::Fold(i % k));
            }
        }
        SplitStrategy::Rand { p } | SplitStrategy::Old { p } => {
            if matches!(strategy, SplitStrategy::Old { .. }) {
                if let Some(e) = order.iter().find(|e| e.deployed_at.is_none()) {
                    return Err(SplitError::MissingTimestamp(e.id.clone()));
                }
                order.sort_by(|a, b| a.deployed_at.cmp(&b.deployed_at).then_with(|| a.id.cmp(&b.id)));
            } else {
                order.shuffle(&mut rng);
            }
            let train = pct_count(order.len(), p);
            let val = (order.len() - train) / 2;
            for (i, e) in order.iter().enumerate() {
                let t = if i < train {
                    SplitTarget::Train
                } else if i < train + val {
                    SplitTarget::Val
                } else {
                    SplitTarget::Test
                };
                assignments.insert(e.id.clone(), Assignment::Split(t));
            }
        }
    }
    Ok(SplitPlan { strategy, seed, assignments })
}
