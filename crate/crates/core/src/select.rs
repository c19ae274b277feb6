//! Streaming variance-threshold feature selection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::types::FeatureVector;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Population variance (divides by the count).
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }
}

/// Per-feature running variance. Word-gram columns are never tracked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningVariance {
    features: BTreeMap<String, Welford>,
}

impl RunningVariance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, fv: &FeatureVector) {
        for (key, value) in fv.iter() {
            if FeatureVector::is_wordgram(key) {
                continue;
            }
            if !value.is_finite() {
                log::warn!("variance selector: non-finite `{key}` ignored");
                continue;
            }
            match self.features.get_mut(key) {
                Some(w) => w.push(value),
                None => {
                    let mut w = Welford::default();
                    w.push(value);
                    self.features.insert(key.to_owned(), w);
                }
            }
        }
    }

    pub fn variance(&self, key: &str) -> Option<f64> {
        self.features.get(key).map(Welford::variance)
    }

    pub fn tracked(&self) -> impl Iterator<Item = &str> {
        self.features.keys().map(String::as_str)
    }

    /// Keys whose variance is strictly greater than `threshold`.
    pub fn selected(&self, threshold: f64) -> BTreeSet<String> {
        self.features
            .iter()
            .filter(|(_, w)| w.variance() > threshold)
            .map(|(k, _)| k.clone())
            .collect()
    }
}

/// A selection snapshot, logged as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSnapshot {
    pub sample_index: u64,
    pub selected: Vec<String>,
    pub dropped: Vec<String>,
}

impl SelectionSnapshot {
    pub fn capture(sample_index: u64, rv: &RunningVariance, selected: &BTreeSet<String>) -> Self {
        Self {
            sample_index,
            selected: selected.iter().cloned().collect(),
            dropped: rv.tracked().filter(|k| !selected.contains(*k)).map(str::to_owned).collect(),
        }
    }
}

/// Restricts `fv` to the selected keys plus every word-gram column.
pub fn project(fv: &FeatureVector, selected: &BTreeSet<String>) -> FeatureVector {
    fv.iter()
        .filter(|(k, _)| FeatureVector::is_wordgram(k) || selected.contains(*k))
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
}
