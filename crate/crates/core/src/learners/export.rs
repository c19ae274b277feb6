//! Serializable tree structure shared with the explanation layer and the
//! dashboard. Nodes are listed in preorder; node 0 is the root.
//!
//! ```json
//! {"tree_id": 0, "nodes": [
//!   {"node_id": 0, "feature_key": "x", "threshold": 0.5, "left": 1, "right": 2},
//!   {"node_id": 1, "class_counts": {"nonspam": 40.0, "spam": 2.0}},
//!   {"node_id": 2, "class_counts": {"nonspam": 1.0, "spam": 37.0}}
//! ]}
//! ```
//!
//! An instance goes right when its value is strictly greater than the
//! threshold.

use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::types::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub nonspam: f64,
    pub spam: f64,
}

impl ClassCounts {
    pub fn as_array(&self) -> [f64; 2] {
        [self.nonspam, self.spam]
    }

    pub fn get(&self, label: Label) -> f64 {
        self.as_array()[label.index()]
    }
}

impl From<[f64; 2]> for ClassCounts {
    fn from(c: [f64; 2]) -> Self {
        Self { nonspam: c[0], spam: c[1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedNode {
    pub node_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_counts: Option<ClassCounts>,
}

impl ExportedNode {
    pub fn leaf(node_id: usize, counts: ClassCounts) -> Self {
        Self { node_id, feature_key: None, threshold: None, left: None, right: None, class_counts: Some(counts) }
    }

    pub fn split(node_id: usize, feature_key: String, threshold: f64, left: usize, right: usize) -> Self {
        Self {
            node_id,
            feature_key: Some(feature_key),
            threshold: Some(threshold),
            left: Some(left),
            right: Some(right),
            class_counts: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.class_counts.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedTree {
    pub tree_id: usize,
    pub nodes: Vec<ExportedNode>,
}

impl ExportedTree {
    pub fn node(&self, id: usize) -> Option<&ExportedNode> {
        self.nodes.get(id).filter(|n| n.node_id == id)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &ExportedTree, id: usize) -> usize {
            match t.node(id) {
                Some(ExportedNode { left: Some(l), right: Some(r), .. }) => 1 + go(t, *l).max(go(t, *r)),
                _ => 0,
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(self, 0)
        }
    }

    /// Checks ids, child references and the leaf/split shape of every node.
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: String| Err(LearnerError::MalformedExport(m));
        if self.nodes.is_empty() {
            return bad("no nodes".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.node_id != i {
                return bad(format!("node at position {i} has id {}", n.node_id));
            }
            match (n.class_counts, &n.feature_key, n.threshold, n.left, n.right) {
                (Some(c), None, None, None, None) => {
                    if !(c.nonspam >= 0.0 && c.spam >= 0.0) {
                        return bad(format!("node {i}: negative class counts"));
                    }
                }
                (None, Some(_), Some(t), Some(l), Some(r)) => {
                    if !t.is_finite() {
                        return bad(format!("node {i}: non-finite threshold"));
                    }
                    if l <= i || r <= i || l >= self.nodes.len() || r >= self.nodes.len() || l == r {
                        return bad(format!("node {i}: bad children {l}/{r}"));
                    }
                }
                _ => return bad(format!("node {i}: neither leaf nor binary split")),
            }
        }
        Ok(())
    }
}
