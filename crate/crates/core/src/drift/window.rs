//! Two-window word-gram data-drift detector.
//!
//! A static past window `P` is filled during the cold start. A current
//! adaptive window `CA` always receives the newest row and is trimmed from
//! the front according to the inter-window chi-square p-value:
//!
//! | p-value          | rows dropped after append | net width |
//! |------------------|---------------------------|-----------|
//! | p ≤ 0.1          | 2                         | −1        |
//! | 0.1 < p < 0.5    | 1                         | 0         |
//! | p ≥ 0.5          | 0                         | +1        |
//!
//! Width is capped at `max_width` and floored at 1. Drift fires when
//! `p ≤ 0.05` and the absolute accuracy difference between the past window
//! and the trailing `|CA|` predictions is at least 0.05; `P` then becomes a
//! snapshot of `CA`.
//!
//! The label history passed to `observe` is appended *after* the analysis,
//! so accuracies at step `k` cover samples `0..k-1`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::chi2::{chi2_pvalue, GramVector};
use crate::textfeat::WordGramRow;
use crate::types::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Cold-start length `n`, the initial width of `P`.
    pub cold_start: usize,
    pub max_width: usize,
    pub drift_p: f64,
    pub drift_aad: f64,
    pub shrink_p: f64,
    pub grow_p: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { cold_start: 500, max_width: 2000, drift_p: 0.05, drift_aad: 0.05, shrink_p: 0.1, grow_p: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowAction {
    Shrink,
    Hold,
    Grow,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Zero-based index of the sample that produced this report.
    pub sample_index: u64,
    pub warmup: bool,
    /// 1.0 during warm-up.
    pub p_value: f64,
    pub aad: f64,
    /// Past-window accuracy this sample was compared against.
    pub acc_p: f64,
    pub acc_ca: f64,
    pub drift: bool,
    pub w_after: usize,
    pub action: WindowAction,
}

/// Prefix sums of correct predictions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelHistory {
    correct_prefix: Vec<u64>,
}

impl LabelHistory {
    pub fn new() -> Self {
        Self { correct_prefix: vec![0] }
    }

    pub fn len(&self) -> usize {
        self.correct_prefix.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, actual: Label, predicted: Label) {
        let last = *self.correct_prefix.last().unwrap_or(&0);
        self.correct_prefix.push(last + u64::from(actual == predicted));
    }

    /// Accuracy over the last `n` entries (all entries if fewer); 0 when empty.
    pub fn trailing_accuracy(&self, n: usize) -> f64 {
        let len = self.len();
        let n = n.min(len);
        if n == 0 {
            return 0.0;
        }
        let hits = self.correct_prefix[len] - self.correct_prefix[len - n];
        hits as f64 / n as f64
    }

    pub fn accuracy(&self) -> f64 {
        self.trailing_accuracy(self.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowState {
    pub config: WindowConfig,
    past_len: usize,
    past_sum: GramVector,
    current: VecDeque<WordGramRow>,
    current_sum: GramVector,
    history: LabelHistory,
    acc_p: f64,
    k: u64,
}

impl WindowState {
    pub fn new(config: WindowConfig) -> Self {
        Self {
            config,
            past_len: 0,
            past_sum: GramVector::new(),
            current: VecDeque::new(),
            current_sum: GramVector::new(),
            history: LabelHistory::new(),
            acc_p: 0.0,
            k: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.current.len()
    }

    pub fn past_width(&self) -> usize {
        self.past_len
    }

    pub fn past_sum(&self) -> &GramVector {
        &self.past_sum
    }

    pub fn current_sum(&self) -> &GramVector {
        &self.current_sum
    }

    pub fn acc_p(&self) -> f64 {
        self.acc_p
    }

    pub fn samples_seen(&self) -> u64 {
        self.k
    }

    pub fn history(&self) -> &LabelHistory {
        &self.history
    }

    pub fn in_warmup(&self) -> bool {
        self.k < self.config.cold_start as u64
    }

    fn drop_oldest(&mut self, n: usize) {
        let n = n.min(self.current.len().saturating_sub(1));
        for _ in 0..n {
            if let Some(row) = self.current.pop_front() {
                self.current_sum.sub_row(&row);
            }
        }
    }

    /// One detector step for a sample whose prediction is already known.
    pub fn observe(&mut self, row: WordGramRow, actual: Label, predicted: Label) -> DriftReport {
        let cfg = self.config;
        let n = cfg.cold_start as u64;
        let sample_index = self.k;

        if self.k < n {
            self.past_sum.add_row(&row);
            self.past_len += 1;
        }
        self.current_sum.add_row(&row);
        self.current.push_back(row);
        self.k += 1;

        if self.k == n {
            self.acc_p = self.history.accuracy();
        }

        let report = if self.k >= n {
            let p_value = chi2_pvalue(&self.current_sum, &self.past_sum);
            let acc_ca = self.history.trailing_accuracy(self.current.len());
            let acc_p = self.acc_p;
            let aad = (acc_p - acc_ca).abs();
            let mut action = if p_value <= cfg.shrink_p {
                self.drop_oldest(2);
                WindowAction::Shrink
            } else if p_value < cfg.grow_p {
                self.drop_oldest(1);
                WindowAction::Hold
            } else {
                WindowAction::Grow
            };
            let overflow = self.current.len().saturating_sub(cfg.max_width);
            self.drop_oldest(overflow);

            let drift = p_value <= cfg.drift_p && aad >= cfg.drift_aad;
            if drift {
                self.past_sum = self.current_sum.clone();
                self.past_len = self.current.len();
                self.acc_p = self.history.trailing_accuracy(self.past_len);
                action = WindowAction::Reset;
            }
            DriftReport {
                sample_index,
                warmup: false,
                p_value,
                aad,
                acc_p,
                acc_ca,
                drift,
                w_after: self.current.len(),
                action,
            }
        } else {
            DriftReport {
                sample_index,
                warmup: true,
                p_value: 1.0,
                aad: 0.0,
                acc_p: self.acc_p,
                acc_ca: 0.0,
                drift: false,
                w_after: self.current.len(),
                action: WindowAction::Grow,
            }
        };

        self.history.push(actual, predicted);
        report
    }
}
