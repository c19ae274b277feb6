use serde::{Deserialize, Serialize};

use crate::types::Label;

/// `counts[actual][predicted]`, indexed by [`Label::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[u64; 2]; 2],
}

impl Confusion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        // positive class = spam
        Self { counts: [[tn, fp], [fn_, tp]] }
    }

    pub fn add(&mut self, actual: Label, predicted: Label) {
        self.counts[actual.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &Confusion) {
        for a in 0..2 {
            for p in 0..2 {
                self.counts[a][p] += other.counts[a][p];
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.correct() as f64 / t as f64
        }
    }

    pub fn precision(&self, class: Label) -> f64 {
        let c = class.index();
        let predicted = self.counts[0][c] + self.counts[1][c];
        if predicted == 0 {
            0.0
        } else {
            self.counts[c][c] as f64 / predicted as f64
        }
    }

    pub fn recall(&self, class: Label) -> f64 {
        let c = class.index();
        let actual = self.counts[c][0] + self.counts[c][1];
        if actual == 0 {
            0.0
        } else {
            self.counts[c][c] as f64 / actual as f64
        }
    }

    /// `2PR/(P+R)`, 0 when `P + R = 0`.
    pub fn f_measure(&self, class: Label) -> f64 {
        let p = self.precision(class);
        let r = self.recall(class);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn macro_f(&self) -> f64 {
        (self.f_measure(Label::NonSpam) + self.f_measure(Label::Spam)) / 2.0
    }

    pub fn summary(&self) -> MetricsSummary {
        MetricsSummary {
            samples: self.total(),
            accuracy: self.accuracy(),
            f_nonspam: self.f_measure(Label::NonSpam),
            f_spam: self.f_measure(Label::Spam),
            macro_f: self.macro_f(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub samples: u64,
    pub accuracy: f64,
    pub f_nonspam: f64,
    pub f_spam: f64,
    pub macro_f: f64,
}
