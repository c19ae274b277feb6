//! Explanations built from exported trees: decision paths, path-frequency
//! feature relevance, per-user quartile severity and a text description.

pub mod describe;

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::drift::DriftReport;
use crate::learners::{ClassCounts, ExportedTree, OnlineModel, Prediction, Proba};
use crate::types::{FeatureVector, Label};

pub use describe::{
    build_prompt, describe, template_description, DescriptionGenerator, DescriptionSource, GeneratorError,
    MockGenerator,
};

pub const HISTORY_LIMIT: usize = 512;
pub const MIN_HISTORY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Greater,
    LessEqual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub node_id: usize,
    pub feature_key: String,
    pub threshold: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPath {
    pub tree_id: usize,
    pub steps: Vec<Step>,
    pub leaf_id: usize,
    pub leaf_counts: ClassCounts,
}

/// Walks `tree` from the root; a key missing from `fv` reads as 0.
pub fn trace_path(tree: &ExportedTree, fv: &FeatureVector) -> DecisionPath {
    let mut steps = Vec::new();
    let mut id = 0;
    loop {
        let Some(node) = tree.node(id) else {
            log::warn!("tree {}: dangling node reference {id}", tree.tree_id);
            return DecisionPath { tree_id: tree.tree_id, steps, leaf_id: id, leaf_counts: ClassCounts::default() };
        };
        match (&node.feature_key, node.threshold, node.left, node.right) {
            (Some(key), Some(t), Some(l), Some(r)) => {
                let value = fv.get_opt(key).unwrap_or_else(|| {
                    log::debug!("feature `{key}` missing from vector, read as 0");
                    0.0
                });
                let direction = if value > t { Direction::Greater } else { Direction::LessEqual };
                steps.push(Step { node_id: id, feature_key: key.clone(), threshold: t, direction });
                id = if direction == Direction::Greater { r } else { l };
            }
            _ => {
                return DecisionPath {
                    tree_id: tree.tree_id,
                    steps,
                    leaf_id: id,
                    leaf_counts: node.class_counts.unwrap_or_default(),
                }
            }
        }
    }
}

/// True when every step follows an edge of `tree`, each comparison agrees
/// with `fv`, and the walk ends on the recorded leaf.
pub fn trace_paths(trees: &[ExportedTree], fv: &FeatureVector) -> Vec<DecisionPath> {
    trees.iter().map(|t| trace_path(t, fv)).collect()
}

/// Paths read directly off a live model; identical to tracing its export.
pub fn model_paths(model: &OnlineModel, fv: &FeatureVector) -> Vec<DecisionPath> {
    model
        .walks(fv)
        .into_iter()
        .enumerate()
        .map(|(tree_id, (steps, leaf_id, counts))| DecisionPath {
            tree_id,
            steps: steps
                .into_iter()
                .map(|s| Step {
                    node_id: s.node_id,
                    feature_key: s.feature_key,
                    threshold: s.threshold,
                    direction: if s.greater { Direction::Greater } else { Direction::LessEqual },
                })
                .collect(),
            leaf_id,
            leaf_counts: counts.into(),
        })
        .collect()
}

pub fn replay(path: &DecisionPath, tree: &ExportedTree, fv: &FeatureVector) -> bool {
    let mut id = 0;
    for step in &path.steps {
        let Some(node) = tree.node(id) else { return false };
        if step.node_id != id || node.feature_key.as_deref() != Some(step.feature_key.as_str()) {
            return false;
        }
        if node.threshold != Some(step.threshold) {
            return false;
        }
        let greater = fv.get(&step.feature_key) > step.threshold;
        if greater != (step.direction == Direction::Greater) {
            return false;
        }
        let next = if greater { node.right } else { node.left };
        match next {
            Some(n) => id = n,
            None => return false,
        }
    }
    tree.node(id).is_some_and(|n| n.is_leaf() && n.class_counts == Some(path.leaf_counts)) && id == path.leaf_id
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relevance {
    pub feature_key: String,
    pub count: usize,
}

/// Counts `greater` steps per feature across all paths; keeps counts of at
/// least `min_frequency`; sorts by count descending, then key.
pub fn feature_relevance(paths: &[DecisionPath], min_frequency: usize) -> Vec<Relevance> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for step in paths.iter().flat_map(|p| &p.steps) {
        if step.direction == Direction::Greater {
            *counts.entry(step.feature_key.as_str()).or_insert(0) += 1;
        }
    }
    let mut out: Vec<Relevance> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_frequency)
        .map(|(k, c)| Relevance { feature_key: k.to_owned(), count: c })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.feature_key.cmp(&b.feature_key)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Green,
    Yellow,
    Red,
    Unknown,
}

/// Linear-interpolation quantile of sorted data (`h = (n − 1)·q`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Green above Q50, yellow within [Q25, Q50], red below Q25.
pub fn severity(value: f64, history: &[f64]) -> Severity {
    if history.len() < MIN_HISTORY || !value.is_finite() {
        return Severity::Unknown;
    }
    let mut sorted: Vec<f64> = history.iter().copied().filter(|x| x.is_finite()).collect();
    if sorted.len() < MIN_HISTORY {
        return Severity::Unknown;
    }
    sorted.sort_by(f64::total_cmp);
    let q25 = quantile(&sorted, 0.25);
    let q50 = quantile(&sorted, 0.5);
    if value > q50 {
        Severity::Green
    } else if value >= q25 {
        Severity::Yellow
    } else {
        Severity::Red
    }
}

/// Each user's last [`HISTORY_LIMIT`] values per feature.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserHistory {
    users: BTreeMap<String, BTreeMap<String, VecDeque<f64>>>,
}

impl UserHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, user_id: &str, fv: &FeatureVector) {
        let per = self.users.entry(user_id.to_owned()).or_default();
        for (k, v) in fv.iter() {
            if !v.is_finite() {
                continue;
            }
            let h = per.entry(k.to_owned()).or_default();
            h.push_back(v);
            if h.len() > HISTORY_LIMIT {
                h.pop_front();
            }
        }
    }

    pub fn values(&self, user_id: &str, feature_key: &str) -> Vec<f64> {
        self.users
            .get(user_id)
            .and_then(|m| m.get(feature_key))
            .map(|h| h.iter().copied().collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInsight {
    pub feature_key: String,
    pub count: usize,
    pub value: f64,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationPayload {
    pub event_id: String,
    pub label: Label,
    pub confidence: f64,
    pub proba: Proba,
    pub features: Vec<FeatureInsight>,
    pub paths: Vec<DecisionPath>,
    pub description: String,
    pub description_source: DescriptionSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_error: Option<String>,
    /// `None` when readability is undefined for the text.
    #[serde(default)]
    pub eflaw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub min_frequency: usize,
    pub max_features: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self { min_frequency: 1, max_features: 10 }
    }
}

pub struct ExplainInput<'a> {
    pub event_id: &'a str,
    pub user_id: &'a str,
    pub prediction: Prediction,
    /// One path per tree, from [`trace_paths`] or [`model_paths`].
    pub paths: &'a [DecisionPath],
    pub features: &'a FeatureVector,
    pub history: Option<&'a UserHistory>,
    pub eflaw: Option<f64>,
    pub drift: Option<&'a DriftReport>,
}

pub fn explain(
    input: &ExplainInput<'_>,
    cfg: &ExplainConfig,
    generator: Option<&dyn DescriptionGenerator>,
) -> ExplanationPayload {
    let paths = input.paths.to_vec();
    let features: Vec<FeatureInsight> = feature_relevance(&paths, cfg.min_frequency)
        .into_iter()
        .take(cfg.max_features)
        .map(|r| {
            let value = input.features.get(&r.feature_key);
            let history = input.history.map(|h| h.values(input.user_id, &r.feature_key)).unwrap_or_default();
            FeatureInsight { severity: severity(value, &history), feature_key: r.feature_key, count: r.count, value }
        })
        .collect();
    let mut payload = ExplanationPayload {
        event_id: input.event_id.to_owned(),
        label: input.prediction.label,
        confidence: input.prediction.proba.max(),
        proba: input.prediction.proba,
        features,
        paths,
        description: String::new(),
        description_source: DescriptionSource::Template,
        generator_error: None,
        eflaw: input.eflaw,
        drift: input.drift.cloned(),
    };
    let (text, source, err) = describe(&payload, generator);
    payload.description = text;
    payload.description_source = source;
    payload.generator_error = err;
    payload
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::ExportedNode;

    fn stump() -> ExportedTree {
        ExportedTree {
            tree_id: 0,
            nodes: vec![
                ExportedNode::split(0, "x".into(), 0.5, 1, 2),
                ExportedNode::leaf(1, [5.0, 1.0].into()),
                ExportedNode::leaf(2, [1.0, 5.0].into()),
            ],
        }
    }

    fn fv(pairs: &[(&str, f64)]) -> FeatureVector {
        pairs.iter().map(|(k, v)| (*k, *v)).collect()
    }

    fn step(key: &str, direction: Direction) -> Step {
        Step { node_id: 0, feature_key: key.into(), threshold: 0.0, direction }
    }

    fn path(steps: Vec<Step>) -> DecisionPath {
        DecisionPath { tree_id: 0, steps, leaf_id: 0, leaf_counts: Default::default() }
    }

    #[test]
    fn single_leaf_empty_path() {
        let t = ExportedTree { tree_id: 3, nodes: vec![ExportedNode::leaf(0, [1.0, 2.0].into())] };
        let p = trace_path(&t, &fv(&[]));
        assert!(p.steps.is_empty());
        assert_eq!(p.tree_id, 3);
        assert!(replay(&p, &t, &fv(&[])));
    }

    #[test]
    fn stump_greater() {
        let p = trace_path(&stump(), &fv(&[("x", 0.7)]));
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].direction, Direction::Greater);
        assert_eq!(p.leaf_id, 2);
        assert!(replay(&p, &stump(), &fv(&[("x", 0.7)])));
        assert!(!replay(&p, &stump(), &fv(&[("x", 0.2)])));
        let missing = trace_path(&stump(), &fv(&[]));
        assert_eq!(missing.steps[0].direction, Direction::LessEqual);
    }

    #[test]
    fn relevance_counts_greater_only() {
        let p = path(vec![
            step("anger", Direction::Greater),
            step("wordcount", Direction::LessEqual),
            step("anger", Direction::Greater),
        ]);
        let r = feature_relevance(&[p], 1);
        assert_eq!(r, vec![Relevance { feature_key: "anger".into(), count: 2 }]);
    }

    #[test]
    fn relevance_sums_trees_and_filters() {
        let paths: Vec<DecisionPath> = (0..3)
            .map(|i| {
                let mut s = vec![step("spam_tendency", Direction::Greater)];
                if i == 0 {
                    s.push(step("a", Direction::Greater));
                }
                path(s)
            })
            .collect();
        let r = feature_relevance(&paths, 1);
        assert_eq!(r[0], Relevance { feature_key: "spam_tendency".into(), count: 3 });
        assert_eq!(r.len(), 2);
        assert_eq!(feature_relevance(&paths, 2).len(), 1);
        let ties = feature_relevance(&[path(vec![step("b", Direction::Greater), step("a", Direction::Greater)])], 1);
        assert_eq!(ties[0].feature_key, "a");
    }

    #[test]
    fn quartile_colors() {
        let h: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(quantile(&h, 0.5), 4.5);
        assert_eq!(quantile(&h, 0.25), 2.75);
        assert_eq!(severity(9.0, &h), Severity::Green);
        assert_eq!(severity(1.0, &h), Severity::Red);
        assert_eq!(severity(4.5, &h), Severity::Yellow);
        assert_eq!(severity(2.75, &h), Severity::Yellow);
        assert_eq!(severity(3.0, &[1.0, 2.0]), Severity::Unknown);
    }

    #[test]
    fn history_bounded() {
        let mut h = UserHistory::new();
        for i in 0..600 {
            h.observe("u", &fv(&[("x", i as f64)]));
        }
        let v = h.values("u", "x");
        assert_eq!(v.len(), HISTORY_LIMIT);
        assert_eq!(v[0], 88.0);
        assert!(h.values("v", "x").is_empty());
    }

    #[test]
    fn model_paths_match_export_and_payload() {
        use crate::learners::{HyperParams, ModelKind};
        let params = HyperParams { grace_period: 20, n_trees: 3, ..Default::default() };
        let mut m = OnlineModel::new(ModelKind::Arfc, params, 5);
        let data = crate::synth::threshold_stream(3000, 2);
        for (x, y) in &data {
            m.learn_one(x, *y);
        }
        let trees = m.export_trees();
        let mut history = UserHistory::new();
        for (x, _) in data.iter().take(50) {
            history.observe("u", x);
            let paths = model_paths(&m, x);
            assert_eq!(paths, trace_paths(&trees, x));
            let input = ExplainInput {
                event_id: "e",
                user_id: "u",
                prediction: m.predict_proba_one(x),
                paths: &paths,
                features: x,
                history: Some(&history),
                eflaw: None,
                drift: None,
            };
            let p = explain(&input, &ExplainConfig::default(), None);
            assert_eq!(p.confidence, p.proba.max());
            assert_eq!(p.paths.len(), 3);
            let greater: usize = p.paths.iter().flat_map(|p| &p.steps).filter(|s| s.direction == Direction::Greater).count();
            assert_eq!(p.features.iter().map(|f| f.count).sum::<usize>(), greater);
        }
    }

    proptest::proptest! {
        #[test]
        fn severity_partitions_line(hist in proptest::collection::vec(-100.0f64..100.0, 4..40), v in -150.0f64..150.0) {
            let mut s = hist.clone();
            s.sort_by(f64::total_cmp);
            let (q25, q50) = (quantile(&s, 0.25), quantile(&s, 0.5));
            let expected = if v > q50 { Severity::Green } else if v >= q25 { Severity::Yellow } else { Severity::Red };
            proptest::prop_assert_eq!(severity(v, &hist), expected);
        }
    }
}
