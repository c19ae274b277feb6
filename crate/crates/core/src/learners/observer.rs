//! Per-leaf numeric attribute observers and split evaluation.
//!
//! Feature vectors are sparse: a key absent from an instance has value 0.
//! An observer only sees the instances where its key was present, so the
//! zeros are restored from the leaf's class weights when a summary is read.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

/// Number of candidate thresholds tried per feature.
pub const N_CANDIDATES: usize = 10;

const MIN_VARIANCE: f64 = 1e-9;

/// Weighted running mean and variance of the present values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedStat {
    pub weight: f64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for WeightedStat {
    fn default() -> Self {
        Self { weight: 0.0, mean: 0.0, m2: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }
}

impl WeightedStat {
    pub fn push(&mut self, x: f64, w: f64) {
        if w <= 0.0 {
            return;
        }
        self.weight += w;
        let delta = x - self.mean;
        self.mean += w * delta / self.weight;
        self.m2 += w * delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Summary over `total` weight where the unseen remainder is zeros.
    pub fn with_zeros(&self, total: f64) -> Gaussian {
        let total = total.max(self.weight);
        if total <= 0.0 {
            return Gaussian::default();
        }
        let zeros = total - self.weight;
        let mean = self.weight * self.mean / total;
        let m2 = self.m2 + self.weight * zeros / total * self.mean * self.mean;
        let (mut min, mut max) = if self.weight > 0.0 { (self.min, self.max) } else { (0.0, 0.0) };
        if zeros > 1e-12 {
            min = min.min(0.0);
            max = max.max(0.0);
        }
        Gaussian { weight: total, mean, variance: (m2 / total).max(0.0), min, max }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Gaussian {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
}

impl Gaussian {
    pub fn cdf(&self, x: f64) -> f64 {
        if self.variance <= MIN_VARIANCE {
            return if x >= self.mean { 1.0 } else { 0.0 };
        }
        0.5 * (1.0 + erf((x - self.mean) / (2.0 * self.variance).sqrt()))
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let var = self.variance.max(MIN_VARIANCE);
        let d = x - self.mean;
        -0.5 * (2.0 * std::f64::consts::PI * var).ln() - d * d / (2.0 * var)
    }

    /// Weight expected at or below `t`.
    pub fn weight_le(&self, t: f64) -> f64 {
        if self.weight <= 0.0 || t < self.min {
            0.0
        } else if t >= self.max {
            self.weight
        } else {
            self.weight * self.cdf(t)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureObserver {
    pub per_class: [WeightedStat; 2],
}

impl FeatureObserver {
    pub fn push(&mut self, class: usize, x: f64, w: f64) {
        self.per_class[class].push(x, w);
    }

    pub fn summaries(&self, class_weight: [f64; 2]) -> [Gaussian; 2] {
        [self.per_class[0].with_zeros(class_weight[0]), self.per_class[1].with_zeros(class_weight[1])]
    }
}

pub fn entropy(dist: [f64; 2]) -> f64 {
    let total = dist[0] + dist[1];
    if total <= 0.0 {
        return 0.0;
    }
    dist.iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

pub fn info_gain(parent: [f64; 2], left: [f64; 2], right: [f64; 2]) -> f64 {
    let total = parent[0] + parent[1];
    if total <= 0.0 {
        return 0.0;
    }
    let wl = (left[0] + left[1]) / total;
    let wr = (right[0] + right[1]) / total;
    entropy(parent) - wl * entropy(left) - wr * entropy(right)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub feature: String,
    pub threshold: f64,
    pub merit: f64,
    /// Class weights routed left (`<= threshold`) and right.
    pub children: [[f64; 2]; 2],
}

/// Best of the evenly spaced thresholds `min + (max − min)·i/11`, i = 1..=10.
pub fn best_split(feature: &str, obs: &FeatureObserver, class_weight: [f64; 2]) -> Option<SplitCandidate> {
    let g = obs.summaries(class_weight);
    let live: Vec<&Gaussian> = g.iter().filter(|s| s.weight > 0.0).collect();
    let min = live.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let max = live.iter().map(|s| s.max).fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return None;
    }
    let mut best: Option<SplitCandidate> = None;
    for i in 1..=N_CANDIDATES {
        let t = min + (max - min) * i as f64 / (N_CANDIDATES + 1) as f64;
        let left = [g[0].weight_le(t), g[1].weight_le(t)];
        let right = [g[0].weight - left[0], g[1].weight - left[1]];
        let merit = info_gain([g[0].weight, g[1].weight], left, right);
        if best.as_ref().map_or(true, |b| merit > b.merit) {
            best = Some(SplitCandidate { feature: feature.to_owned(), threshold: t, merit, children: [left, right] });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy([5.0, 0.0]), 0.0);
        assert!((entropy([1.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((info_gain([2.0, 2.0], [2.0, 0.0], [0.0, 2.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn implicit_zeros_match_explicit() {
        let mut sparse = WeightedStat::default();
        let mut dense = WeightedStat::default();
        for x in [3.0, 5.0, 1.0] {
            sparse.push(x, 1.0);
            dense.push(x, 1.0);
        }
        dense.push(0.0, 1.0);
        dense.push(0.0, 1.0);
        let a = sparse.with_zeros(5.0);
        let b = dense.with_zeros(5.0);
        assert!((a.mean - b.mean).abs() < 1e-12);
        assert!((a.variance - b.variance).abs() < 1e-12);
        assert_eq!((a.min, a.max), (0.0, 5.0));
    }

    #[test]
    fn separable_feature_scores_high() {
        let mut obs = FeatureObserver::default();
        for i in 0..100 {
            let x = i as f64 / 100.0;
            obs.push(usize::from(x > 0.5), x, 1.0);
        }
        let c = best_split("x", &obs, [51.0, 49.0]).unwrap();
        assert!(c.threshold > 0.3 && c.threshold < 0.7, "{}", c.threshold);
        assert!(c.merit > 0.5);
    }

    #[test]
    fn constant_feature_has_no_split() {
        let mut obs = FeatureObserver::default();
        obs.push(0, 1.0, 1.0);
        obs.push(1, 1.0, 1.0);
        assert!(best_split("x", &obs, [1.0, 1.0]).is_none());
    }
}
