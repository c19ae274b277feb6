//! Hoeffding tree with optional adaptive (HAT) subtree replacement and
//! optional random feature subspaces (forest members).

use std::collections::BTreeMap;

use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::export::{ExportedNode, ExportedTree};
use super::observer::{best_split, FeatureObserver, SplitCandidate};
use super::{hoeffding_bound, HyperParams, LeafMode, LearnerError, Prediction, Proba};
use crate::drift::Adwin;
use crate::types::{FeatureVector, Label};

/// Range of the information-gain merit for two classes, `log2(2)`.
const MERIT_RANGE: f64 = 1.0;
const ALT_WINDOW_THRESHOLD: usize = 300;
const ALT_SWAP_DELTA: f64 = 0.05;
const ALT_ADWIN_DELTA: f64 = 0.002;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeOptions {
    /// Per-node error monitors with alternate subtrees.
    pub adaptive: bool,
    /// Random feature subset of size `floor(sqrt(m)) + 1` per split attempt.
    pub subspace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub node_id: usize,
    pub feature_key: String,
    pub threshold: f64,
    /// `true` when the value was strictly greater than the threshold.
    pub greater: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Leaf {
    class_weight: [f64; 2],
    observed: [f64; 2],
    observers: BTreeMap<String, FeatureObserver>,
    last_attempt: f64,
    mc_correct: f64,
    nb_correct: f64,
    monitor: Option<Adwin>,
}

impl Leaf {
    fn new(class_weight: [f64; 2], adaptive: bool) -> Self {
        Self {
            class_weight,
            observed: [0.0; 2],
            observers: BTreeMap::new(),
            last_attempt: 0.0,
            mc_correct: 0.0,
            nb_correct: 0.0,
            monitor: adaptive.then(|| Adwin::new(ALT_ADWIN_DELTA)),
        }
    }

    fn observed_total(&self) -> f64 {
        self.observed[0] + self.observed[1]
    }

    fn nb_proba(&self, fv: &FeatureVector) -> Option<Proba> {
        if self.observers.is_empty() || self.observed_total() <= 0.0 {
            return None;
        }
        let total = self.class_weight[0] + self.class_weight[1];
        let mut logp = [0.0f64; 2];
        for (c, lp) in logp.iter_mut().enumerate() {
            *lp = ((self.class_weight[c] + 1.0) / (total + 2.0)).ln();
        }
        for (key, obs) in &self.observers {
            let x = fv.get(key);
            let g = obs.summaries(self.observed);
            for c in 0..2 {
                if g[c].weight > 0.0 {
                    logp[c] += g[c].log_pdf(x);
                }
            }
        }
        let m = logp[0].max(logp[1]);
        if !m.is_finite() {
            return None;
        }
        Some(Proba::normalized([(logp[0] - m).exp(), (logp[1] - m).exp()]))
    }

    fn proba(&self, fv: &FeatureVector, mode: LeafMode) -> Proba {
        if mode == LeafMode::NaiveAdaptive && self.nb_correct > self.mc_correct {
            if let Some(p) = self.nb_proba(fv) {
                return p;
            }
        }
        Proba::laplace(self.class_weight)
    }

    fn learn(&mut self, fv: &FeatureVector, label: Label, w: f64, mode: LeafMode) {
        if mode == LeafMode::NaiveAdaptive && self.observed_total() > 0.0 {
            if Proba::laplace(self.class_weight).argmax() == label {
                self.mc_correct += w;
            }
            if self.nb_proba(fv).is_some_and(|p| p.argmax() == label) {
                self.nb_correct += w;
            }
        }
        let c = label.index();
        self.class_weight[c] += w;
        self.observed[c] += w;
        for (key, value) in fv.iter() {
            if !value.is_finite() {
                continue;
            }
            match self.observers.get_mut(key) {
                Some(obs) => obs.push(c, value, w),
                None => {
                    let mut obs = FeatureObserver::default();
                    obs.push(c, value, w);
                    self.observers.insert(key.to_owned(), obs);
                }
            }
        }
    }

    fn attempt_split(&mut self, params: &HyperParams, opts: TreeOptions, rng: &mut ChaCha8Rng) -> Option<SplitCandidate> {
        self.last_attempt = self.observed_total();
        if self.class_weight.iter().filter(|&&w| w > 0.0).count() < 2 {
            return None;
        }
        let keys: Vec<&String> = if opts.subspace {
            let m = self.observers.len();
            let k = (m as f64).sqrt().floor() as usize + 1;
            if k < m {
                let mut picked = self.observers.keys().choose_multiple(rng, k);
                picked.sort();
                picked
            } else {
                self.observers.keys().collect()
            }
        } else {
            self.observers.keys().collect()
        };
        let mut candidates: Vec<SplitCandidate> =
            keys.into_iter().filter_map(|k| best_split(k, &self.observers[k], self.observed)).collect();
        candidates.sort_by(|a, b| b.merit.total_cmp(&a.merit));
        let best = candidates.first()?;
        let second = candidates.get(1).map_or(0.0, |c| c.merit.max(0.0));
        let eps = hoeffding_bound(MERIT_RANGE, params.split_confidence, self.observed_total()).ok()?;
        if best.merit > 0.0 && (best.merit - second > eps || eps < params.tie_threshold) {
            candidates.into_iter().next()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Split {
    feature: String,
    threshold: f64,
    left: Node,
    right: Node,
    monitor: Option<Adwin>,
    alternate: Option<Box<Node>>,
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Leaf(Leaf),
    Split(Box<Split>),
}

struct Ctx<'a> {
    params: &'a HyperParams,
    opts: TreeOptions,
}

impl Node {
    fn from_candidate(c: SplitCandidate, adaptive: bool) -> Node {
        Node::Split(Box::new(Split {
            feature: c.feature,
            threshold: c.threshold,
            left: Node::Leaf(Leaf::new(c.children[0], adaptive)),
            right: Node::Leaf(Leaf::new(c.children[1], adaptive)),
            monitor: adaptive.then(|| Adwin::new(ALT_ADWIN_DELTA)),
            alternate: None,
        }))
    }

    fn leaf_for(&self, fv: &FeatureVector) -> &Leaf {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(l) => return l,
                Node::Split(s) => node = if fv.get(&s.feature) > s.threshold { &s.right } else { &s.left },
            }
        }
    }

    fn size(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split(s) => 1 + s.left.size() + s.right.size(),
        }
    }

    fn monitor(&self) -> Option<&Adwin> {
        match self {
            Node::Leaf(l) => l.monitor.as_ref(),
            Node::Split(s) => s.monitor.as_ref(),
        }
    }

    fn learn(&mut self, fv: &FeatureVector, label: Label, w: f64, ctx: &Ctx, rng: &mut ChaCha8Rng) {
        let mode = ctx.params.leaf_mode;
        let wrong = ctx.opts.adaptive.then(|| self.leaf_for(fv).proba(fv, mode).argmax() != label);
        let mut swap = false;
        match self {
            Node::Leaf(leaf) => {
                if let (Some(m), Some(wrong)) = (leaf.monitor.as_mut(), wrong) {
                    m.update(f64::from(u8::from(wrong)));
                }
                leaf.learn(fv, label, w, mode);
                if leaf.observed_total() - leaf.last_attempt >= f64::from(ctx.params.grace_period) {
                    if let Some(c) = leaf.attempt_split(ctx.params, ctx.opts, rng) {
                        *self = Node::from_candidate(c, ctx.opts.adaptive);
                    }
                }
                return;
            }
            Node::Split(s) => {
                if let (Some(m), Some(wrong)) = (s.monitor.as_mut(), wrong) {
                    let old = m.estimation();
                    let change = m.update(f64::from(u8::from(wrong))) && old <= m.estimation();
                    if change && s.alternate.is_none() {
                        s.alternate = Some(Box::new(Node::Leaf(Leaf::new([0.0; 2], true))));
                    } else if let Some(alt_monitor) = s.alternate.as_ref().and_then(|a| a.monitor()) {
                        let (alt_w, own_w) = (alt_monitor.width(), m.width());
                        if alt_w > ALT_WINDOW_THRESHOLD && own_w > ALT_WINDOW_THRESHOLD {
                            let old_rate = m.estimation();
                            let alt_rate = alt_monitor.estimation();
                            let f_n = 1.0 / alt_w as f64 + 1.0 / own_w as f64;
                            let bound = (2.0 * old_rate * (1.0 - old_rate) * (2.0 / ALT_SWAP_DELTA).ln() * f_n).sqrt();
                            if bound < old_rate - alt_rate {
                                swap = true;
                            } else if bound < alt_rate - old_rate {
                                s.alternate = None;
                            }
                        }
                    }
                }
                if !swap {
                    if let Some(alt) = s.alternate.as_mut() {
                        alt.learn(fv, label, w, ctx, rng);
                    }
                    let child = if fv.get(&s.feature) > s.threshold { &mut s.right } else { &mut s.left };
                    child.learn(fv, label, w, ctx, rng);
                }
            }
        }
        if swap {
            if let Node::Split(s) = self {
                if let Some(alt) = s.alternate.take() {
                    *self = *alt;
                }
            }
            self.learn(fv, label, w, ctx, rng);
        }
    }

    fn export_into(&self, out: &mut Vec<ExportedNode>) {
        let id = out.len();
        match self {
            Node::Leaf(l) => out.push(ExportedNode::leaf(id, l.class_weight.into())),
            Node::Split(s) => {
                out.push(ExportedNode::split(id, s.feature.clone(), s.threshold, 0, 0));
                let left = out.len();
                s.left.export_into(out);
                let right = out.len();
                s.right.export_into(out);
                out[id].left = Some(left);
                out[id].right = Some(right);
            }
        }
    }

    fn import(tree: &ExportedTree, id: usize, adaptive: bool) -> Node {
        let n = &tree.nodes[id];
        match (&n.class_counts, &n.feature_key, n.threshold, n.left, n.right) {
            (Some(c), ..) => Node::Leaf(Leaf::new(c.as_array(), adaptive)),
            (None, Some(f), Some(t), Some(l), Some(r)) => Node::Split(Box::new(Split {
                feature: f.clone(),
                threshold: t,
                left: Node::import(tree, l, adaptive),
                right: Node::import(tree, r, adaptive),
                monitor: adaptive.then(|| Adwin::new(ALT_ADWIN_DELTA)),
                alternate: None,
            })),
            _ => unreachable!("validated export"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HoeffdingTree {
    params: HyperParams,
    opts: TreeOptions,
    root: Node,
    rng: ChaCha8Rng,
    weight_seen: f64,
}

impl HoeffdingTree {
    pub fn new(params: HyperParams, opts: TreeOptions, seed: u64) -> Self {
        Self {
            params,
            opts,
            root: Node::Leaf(Leaf::new([0.0; 2], opts.adaptive)),
            rng: ChaCha8Rng::seed_from_u64(seed),
            weight_seen: 0.0,
        }
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn options(&self) -> TreeOptions {
        self.opts
    }

    pub fn weight_seen(&self) -> f64 {
        self.weight_seen
    }

    pub fn learn_one(&mut self, fv: &FeatureVector, label: Label) {
        self.learn_weighted(fv, label, 1.0);
    }

    pub fn learn_weighted(&mut self, fv: &FeatureVector, label: Label, weight: f64) {
        if !(weight > 0.0) {
            return;
        }
        self.weight_seen += weight;
        let ctx = Ctx { params: &self.params, opts: self.opts };
        self.root.learn(fv, label, weight, &ctx, &mut self.rng);
    }

    pub fn predict_proba_one(&self, fv: &FeatureVector) -> Prediction {
        Prediction::from_proba(self.root.leaf_for(fv).proba(fv, self.params.leaf_mode))
    }

    /// Root-to-leaf walk with preorder node ids; returns the steps, the
    /// leaf id and the leaf class weights.
    pub fn walk(&self, fv: &FeatureVector) -> (Vec<PathStep>, usize, [f64; 2]) {
        let mut steps = Vec::new();
        let mut node = &self.root;
        let mut id = 0;
        loop {
            match node {
                Node::Leaf(l) => return (steps, id, l.class_weight),
                Node::Split(s) => {
                    let greater = fv.get(&s.feature) > s.threshold;
                    steps.push(PathStep { node_id: id, feature_key: s.feature.clone(), threshold: s.threshold, greater });
                    if greater {
                        id += 1 + s.left.size();
                        node = &s.right;
                    } else {
                        id += 1;
                        node = &s.left;
                    }
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.root.size()
    }

    pub fn n_leaves(&self) -> usize {
        self.n_nodes().div_ceil(2)
    }

    pub fn is_leaf_only(&self) -> bool {
        matches!(self.root, Node::Leaf(_))
    }

    pub fn root_split(&self) -> Option<(&str, f64)> {
        match &self.root {
            Node::Split(s) => Some((s.feature.as_str(), s.threshold)),
            Node::Leaf(_) => None,
        }
    }

    pub fn export(&self, tree_id: usize) -> ExportedTree {
        let mut nodes = Vec::with_capacity(self.n_nodes());
        self.root.export_into(&mut nodes);
        ExportedTree { tree_id, nodes }
    }

    /// Rebuilds a tree whose leaves carry only the exported class weights.
    pub fn from_export(tree: &ExportedTree, params: HyperParams, opts: TreeOptions, seed: u64) -> Result<Self, LearnerError> {
        tree.validate()?;
        let mut t = Self::new(params, opts, seed);
        t.root = Node::import(tree, 0, opts.adaptive);
        Ok(t)
    }
}
