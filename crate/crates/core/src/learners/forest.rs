//! Adaptive random forest: online bagging with Poisson(λ) weights, random
//! feature subspaces, and per-member ADWIN warning/drift monitors that grow
//! and promote background trees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::export::ExportedTree;
use super::tree::{HoeffdingTree, TreeOptions};
use super::{HyperParams, LearnerError, Prediction, Proba};
use crate::drift::Adwin;
use crate::types::{FeatureVector, Label};

pub const WARNING_DELTA: f64 = 0.01;
pub const DRIFT_DELTA: f64 = 0.001;

const MEMBER_OPTIONS: TreeOptions = TreeOptions { adaptive: false, subspace: true };

#[derive(Debug, Clone)]
struct Member {
    tree: HoeffdingTree,
    background: Option<HoeffdingTree>,
    warning: Adwin,
    drift: Adwin,
}

impl Member {
    fn new(tree: HoeffdingTree) -> Self {
        Self { tree, background: None, warning: Adwin::new(WARNING_DELTA), drift: Adwin::new(DRIFT_DELTA) }
    }
}

/// Majority vote of member labels; proba is the mean member distribution.
/// A tied vote is settled by the mean distribution, then by `NonSpam`.
pub fn majority_vote(preds: &[Prediction]) -> Prediction {
    if preds.is_empty() {
        return Prediction::uniform();
    }
    let mut votes = [0usize; 2];
    let mut sum = [0.0f64; 2];
    for p in preds {
        votes[p.label.index()] += 1;
        sum[0] += p.proba.nonspam;
        sum[1] += p.proba.spam;
    }
    let n = preds.len() as f64;
    let proba = Proba { nonspam: sum[0] / n, spam: sum[1] / n };
    let label = match votes[1].cmp(&votes[0]) {
        std::cmp::Ordering::Greater => Label::Spam,
        std::cmp::Ordering::Less => Label::NonSpam,
        std::cmp::Ordering::Equal => proba.argmax(),
    };
    Prediction { label, proba }
}

#[derive(Debug, Clone)]
pub struct Forest {
    params: HyperParams,
    seed: u64,
    spawned: u64,
    rng: ChaCha8Rng,
    members: Vec<Member>,
    drifts: u64,
    warnings: u64,
}

impl Forest {
    pub fn new(params: HyperParams, seed: u64) -> Self {
        let mut f = Self {
            params,
            seed,
            spawned: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            members: Vec::new(),
            drifts: 0,
            warnings: 0,
        };
        for _ in 0..params.n_trees.max(1) {
            let t = f.spawn();
            f.members.push(Member::new(t));
        }
        f
    }

    /// A forest over fixed member trees.
    pub fn from_trees(params: HyperParams, trees: Vec<HoeffdingTree>, seed: u64) -> Self {
        Self {
            params,
            seed,
            spawned: trees.len() as u64,
            rng: ChaCha8Rng::seed_from_u64(seed),
            members: trees.into_iter().map(Member::new).collect(),
            drifts: 0,
            warnings: 0,
        }
    }

    pub fn from_export(params: HyperParams, trees: &[ExportedTree], seed: u64) -> Result<Self, LearnerError> {
        let members = trees
            .iter()
            .enumerate()
            .map(|(i, t)| HoeffdingTree::from_export(t, params, MEMBER_OPTIONS, member_seed(seed, i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_trees(params, members, seed))
    }

    fn spawn(&mut self) -> HoeffdingTree {
        let t = HoeffdingTree::new(self.params, MEMBER_OPTIONS, member_seed(self.seed, self.spawned));
        self.spawned += 1;
        t
    }

    pub fn n_trees(&self) -> usize {
        self.members.len()
    }

    pub fn tree(&self, i: usize) -> Option<&HoeffdingTree> {
        self.members.get(i).map(|m| &m.tree)
    }

    pub fn trees(&self) -> impl Iterator<Item = &HoeffdingTree> {
        self.members.iter().map(|m| &m.tree)
    }

    pub fn member_drifts(&self) -> u64 {
        self.drifts
    }

    pub fn member_warnings(&self) -> u64 {
        self.warnings
    }

    pub fn predict_proba_one(&self, fv: &FeatureVector) -> Prediction {
        let preds: Vec<Prediction> = self.members.iter().map(|m| m.tree.predict_proba_one(fv)).collect();
        majority_vote(&preds)
    }

    pub fn learn_one(&mut self, fv: &FeatureVector, label: Label) {
        let poisson = Poisson::new(self.params.lambda.max(1e-9)).expect("positive rate");
        for i in 0..self.members.len() {
            let wrong = f64::from(u8::from(self.members[i].tree.predict_proba_one(fv).label != label));
            let k: f64 = poisson.sample(&mut self.rng);
            let m = &mut self.members[i];
            if k > 0.0 {
                m.tree.learn_weighted(fv, label, k);
                if let Some(bg) = m.background.as_mut() {
                    bg.learn_weighted(fv, label, k);
                }
            }
            if m.warning.update(wrong) {
                self.warnings += 1;
                let bg = self.spawn();
                let m = &mut self.members[i];
                m.background = Some(bg);
                m.warning = Adwin::new(WARNING_DELTA);
            }
            if self.members[i].drift.update(wrong) {
                self.drifts += 1;
                let replacement = match self.members[i].background.take() {
                    Some(bg) => bg,
                    None => self.spawn(),
                };
                self.members[i] = Member::new(replacement);
            }
        }
    }

    pub fn export(&self) -> Vec<ExportedTree> {
        self.members.iter().enumerate().map(|(i, m)| m.tree.export(i)).collect()
    }
}

fn member_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
