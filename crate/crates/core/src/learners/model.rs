use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::export::ExportedTree;
use super::forest::Forest;
use super::tree::{HoeffdingTree, PathStep, TreeOptions};
use super::{HyperParams, LearnerError, Prediction};
use crate::types::{FeatureVector, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Htc,
    Hatc,
    Arfc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Htc, ModelKind::Hatc, ModelKind::Arfc];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Htc => "htc",
            ModelKind::Hatc => "hatc",
            ModelKind::Arfc => "arfc",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "htc" => Ok(ModelKind::Htc),
            "hatc" => Ok(ModelKind::Hatc),
            "arfc" => Ok(ModelKind::Arfc),
            _ => Err(LearnerError::Unknown { what: "model", value: s.to_owned() }),
        }
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Tree(HoeffdingTree),
    Forest(Forest),
}

/// One of the three learners behind a common interface.
#[derive(Debug, Clone)]
pub struct OnlineModel {
    kind: ModelKind,
    params: HyperParams,
    seed: u64,
    inner: Inner,
    whitelist: Option<BTreeSet<String>>,
    warned: BTreeSet<String>,
    samples_seen: u64,
}

fn tree_options(kind: ModelKind) -> TreeOptions {
    TreeOptions { adaptive: kind == ModelKind::Hatc, subspace: false }
}

impl OnlineModel {
    pub fn new(kind: ModelKind, params: HyperParams, seed: u64) -> Self {
        let inner = match kind {
            ModelKind::Arfc => Inner::Forest(Forest::new(params, seed)),
            _ => Inner::Tree(HoeffdingTree::new(params, tree_options(kind), seed)),
        };
        Self { kind, params, seed, inner, whitelist: None, warned: BTreeSet::new(), samples_seen: 0 }
    }

    /// Restricts learning and prediction to `keys`; other keys are ignored.
    pub fn with_whitelist(mut self, keys: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.whitelist = Some(keys.into_iter().map(Into::into).collect());
        self
    }

    /// Rebuilds a model from exported trees; leaves keep class weights only.
    pub fn from_export(kind: ModelKind, params: HyperParams, trees: &[ExportedTree], seed: u64) -> Result<Self, LearnerError> {
        let inner = match kind {
            ModelKind::Arfc => Inner::Forest(Forest::from_export(params, trees, seed)?),
            _ => {
                let [tree] = trees else {
                    return Err(LearnerError::MalformedExport(format!("{kind} expects one tree, got {}", trees.len())));
                };
                Inner::Tree(HoeffdingTree::from_export(tree, params, tree_options(kind), seed)?)
            }
        };
        Ok(Self { kind, params, seed, inner, whitelist: None, warned: BTreeSet::new(), samples_seen: 0 })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    fn filtered<'a>(&self, fv: &'a FeatureVector) -> std::borrow::Cow<'a, FeatureVector> {
        match &self.whitelist {
            None => std::borrow::Cow::Borrowed(fv),
            Some(w) => std::borrow::Cow::Owned(fv.iter().filter(|(k, _)| w.contains(*k)).collect()),
        }
    }

    pub fn learn_one(&mut self, fv: &FeatureVector, label: Label) {
        if let Some(w) = &self.whitelist {
            for key in fv.keys() {
                if !w.contains(key) && self.warned.insert(key.to_owned()) {
                    log::warn!("{}: unknown feature `{key}` ignored", self.kind);
                }
            }
        }
        let fv = self.filtered(fv);
        self.samples_seen += 1;
        match &mut self.inner {
            Inner::Tree(t) => t.learn_one(&fv, label),
            Inner::Forest(f) => f.learn_one(&fv, label),
        }
    }

    pub fn predict_proba_one(&self, fv: &FeatureVector) -> Prediction {
        let fv = self.filtered(fv);
        match &self.inner {
            Inner::Tree(t) => t.predict_proba_one(&fv),
            Inner::Forest(f) => f.predict_proba_one(&fv),
        }
    }

    pub fn n_trees(&self) -> usize {
        match &self.inner {
            Inner::Tree(_) => 1,
            Inner::Forest(f) => f.n_trees(),
        }
    }

    pub fn tree(&self, i: usize) -> Option<&HoeffdingTree> {
        match &self.inner {
            Inner::Tree(t) => (i == 0).then_some(t),
            Inner::Forest(f) => f.tree(i),
        }
    }

    pub fn export_trees(&self) -> Vec<ExportedTree> {
        match &self.inner {
            Inner::Tree(t) => vec![t.export(0)],
            Inner::Forest(f) => f.export(),
        }
    }

    /// Per tree: the walk's steps, leaf id and leaf class weights.
    pub fn walks(&self, fv: &FeatureVector) -> Vec<(Vec<PathStep>, usize, [f64; 2])> {
        let fv = self.filtered(fv);
        (0..self.n_trees()).filter_map(|i| self.tree(i)).map(|t| t.walk(&fv)).collect()
    }
}
