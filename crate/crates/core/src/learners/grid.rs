//! Exhaustive hyperparameter search over a window of labelled samples.

use super::model::{ModelKind, OnlineModel};
use super::{HyperParams, LeafMode};
use crate::types::{FeatureVector, Label};

/// Grid in nesting order grace period, δ, τ, leaf mode (, n_trees).
pub fn default_grid(kind: ModelKind) -> Vec<HyperParams> {
    let trees: &[usize] = if kind == ModelKind::Arfc { &[3, 10] } else { &[10] };
    let mut grid = Vec::new();
    for grace_period in [50, 200] {
        for split_confidence in [1e-7, 1e-5] {
            for tie_threshold in [0.05] {
                for leaf_mode in [LeafMode::Majority, LeafMode::NaiveAdaptive] {
                    for &n_trees in trees {
                        grid.push(HyperParams {
                            grace_period,
                            split_confidence,
                            tie_threshold,
                            leaf_mode,
                            n_trees,
                            ..HyperParams::default()
                        });
                    }
                }
            }
        }
    }
    grid
}

/// Test-then-train accuracy of a fresh model over `window`.
pub fn prequential_accuracy(kind: ModelKind, params: HyperParams, window: &[(FeatureVector, Label)], seed: u64) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    let mut model = OnlineModel::new(kind, params, seed);
    let mut correct = 0usize;
    for (fv, y) in window {
        if model.predict_proba_one(fv).label == *y {
            correct += 1;
        }
        model.learn_one(fv, *y);
    }
    correct as f64 / window.len() as f64
}

/// Highest prequential accuracy wins; ties keep the earlier grid point.
/// An empty window or grid returns `current`.
pub fn grid_search_stream(
    kind: ModelKind,
    window: &[(FeatureVector, Label)],
    grid: &[HyperParams],
    current: HyperParams,
    seed: u64,
) -> HyperParams {
    if window.is_empty() {
        return current;
    }
    let mut best: Option<(f64, HyperParams)> = None;
    for &p in grid {
        let acc = prequential_accuracy(kind, p, window, seed);
        if best.map_or(true, |(b, _)| acc > b) {
            best = Some((acc, p));
        }
    }
    best.map_or(current, |(_, p)| p)
}
