//! Early Drift Detection Method: monitors the distance between consecutive
//! errors. With `m2s = mean + 2·std` of the distances and `m2s_max` its
//! running maximum, the ratio `m2s / m2s_max` below 0.95 is a warning and
//! below 0.9 a drift (after 30 errors).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorSignal {
    Normal,
    Warning,
    Drift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eddm {
    pub warning_level: f64,
    pub drift_level: f64,
    pub min_errors: u64,
    pub min_instances: u64,
    n: u64,
    errors: u64,
    last_error_at: u64,
    mean: f64,
    m2: f64,
    m2s_max: f64,
    warning: bool,
}

impl Default for Eddm {
    fn default() -> Self {
        Self {
            warning_level: 0.95,
            drift_level: 0.9,
            min_errors: 30,
            min_instances: 30,
            n: 0,
            errors: 0,
            last_error_at: 0,
            mean: 0.0,
            m2: 0.0,
            m2s_max: 0.0,
            warning: false,
        }
    }
}

impl Eddm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self {
            warning_level: self.warning_level,
            drift_level: self.drift_level,
            min_errors: self.min_errors,
            min_instances: self.min_instances,
            ..Self::default()
        };
    }

    pub fn errors(&self) -> u64 {
        self.errors
    }

    pub fn mean_distance(&self) -> f64 {
        self.mean
    }

    /// Feeds one misclassification indicator. On drift the detector resets.
    pub fn observe(&mut self, error: bool) -> DetectorSignal {
        self.n += 1;
        if !error {
            return if self.warning { DetectorSignal::Warning } else { DetectorSignal::Normal };
        }
        self.errors += 1;
        let distance = (self.n - self.last_error_at) as f64;
        self.last_error_at = self.n;
        let old_mean = self.mean;
        self.mean += (distance - self.mean) / self.errors as f64;
        self.m2 += (distance - old_mean) * (distance - self.mean);
        let std = (self.m2 / self.errors as f64).sqrt();
        let m2s = self.mean + 2.0 * std;

        if self.n < self.min_instances {
            return DetectorSignal::Normal;
        }
        if m2s > self.m2s_max {
            self.m2s_max = m2s;
            self.warning = false;
            return DetectorSignal::Normal;
        }
        let ratio = m2s / self.m2s_max;
        if self.errors > self.min_errors && ratio < self.drift_level {
            self.reset();
            DetectorSignal::Drift
        } else if self.errors > self.min_errors && ratio < self.warning_level {
            self.warning = true;
            DetectorSignal::Warning
        } else {
            self.warning = false;
            DetectorSignal::Normal
        }
    }
}
