//! Incremental tree classifiers: Hoeffding tree (HTC), Hoeffding adaptive
//! tree (HATC) and adaptive random forest (ARFC).

pub mod export;
pub mod forest;
pub mod grid;
pub mod model;
pub mod observer;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::Label;

pub use export::{ClassCounts, ExportedNode, ExportedTree};
pub use forest::{majority_vote, Forest};
pub use grid::{default_grid, grid_search_stream, prequential_accuracy};
pub use model::{ModelKind, OnlineModel};
pub use tree::{HoeffdingTree, PathStep, TreeOptions};

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("delta must lie in (0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("sample count must be at least 1, got {0}")]
    InvalidCount(f64),
    #[error("range must be non-negative, got {0}")]
    InvalidRange(f64),
    #[error("malformed tree export: {0}")]
    MalformedExport(String),
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
}

/// `ε = sqrt(R² ln(1/δ) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> Result<f64, LearnerError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LearnerError::InvalidDelta(delta));
    }
    if !(n >= 1.0) || !n.is_finite() {
        return Err(LearnerError::InvalidCount(n));
    }
    if !(range >= 0.0) {
        return Err(LearnerError::InvalidRange(range));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafMode {
    Majority,
    NaiveAdaptive,
}

impl fmt::Display for LeafMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeafMode::Majority => "majority",
            LeafMode::NaiveAdaptive => "naive_adaptive",
        })
    }
}

impl FromStr for LeafMode {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "majority" | "mc" => Ok(LeafMode::Majority),
            "naive_adaptive" | "nba" => Ok(LeafMode::NaiveAdaptive),
            _ => Err(LearnerError::Unknown { what: "leaf mode", value: s.to_owned() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub grace_period: u32,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    pub leaf_mode: LeafMode,
    /// Forest only.
    pub n_trees: usize,
    /// Forest only: Poisson rate for online bagging.
    pub lambda: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            grace_period: 200,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            leaf_mode: LeafMode::Majority,
            n_trees: 10,
            lambda: 6.0,
        }
    }
}

/// Class distribution of one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proba {
    pub nonspam: f64,
    pub spam: f64,
}

impl Proba {
    pub fn uniform() -> Self {
        Self { nonspam: 0.5, spam: 0.5 }
    }

    /// Laplace-smoothed (α = 1) distribution of class weights.
    pub fn laplace(counts: [f64; 2]) -> Self {
        let total = counts[0] + counts[1] + 2.0;
        Self { nonspam: (counts[0] + 1.0) / total, spam: (counts[1] + 1.0) / total }
    }

    /// Normalizes non-negative weights; all-zero gives the uniform prior.
    pub fn normalized(weights: [f64; 2]) -> Self {
        let total = weights[0] + weights[1];
        if !(total > 0.0) || !total.is_finite() {
            return Self::uniform();
        }
        Self { nonspam: weights[0] / total, spam: weights[1] / total }
    }

    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::NonSpam => self.nonspam,
            Label::Spam => self.spam,
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.nonspam, self.spam]
    }

    /// Ties go to `NonSpam`.
    pub fn argmax(&self) -> Label {
        if self.spam > self.nonspam {
            Label::Spam
        } else {
            Label::NonSpam
        }
    }

    pub fn max(&self) -> f64 {
        self.nonspam.max(self.spam)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub proba: Proba,
}

impl Prediction {
    pub fn from_proba(proba: Proba) -> Self {
        Self { label: proba.argmax(), proba }
    }

    pub fn uniform() -> Self {
        Self::from_proba(Proba::uniform())
    }

    pub fn confidence(&self) -> f64 {
        self.proba.get(self.label)
    }
}
