//! Shared domain types: raw events, labels and sparse feature vectors.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Binary ground truth. Declaration order is the documented tie order:
/// `NonSpam` wins ties against `Spam`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    NonSpam,
    Spam,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NonSpam, Label::Spam];

    pub fn index(self) -> usize {
        match self {
            Label::NonSpam => 0,
            Label::Spam => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::NonSpam
        } else {
            Label::Spam
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::NonSpam => Label::Spam,
            Label::Spam => Label::NonSpam,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NonSpam => "nonspam",
            Label::Spam => "spam",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One review or revision as it arrives on the stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub event_id: String,
    pub user_id: String,
    pub item_id: String,
    /// UTC seconds.
    pub timestamp: i64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
    /// `None` for live events whose ground truth is not known yet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    /// Numeric passthrough columns (MediaWiki revision metadata).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl RawEvent {
    pub fn new(
        event_id: impl Into<String>,
        user_id: impl Into<String>,
        item_id: impl Into<String>,
        timestamp: i64,
        text: impl Into<String>,
    ) -> Self {
        Self {
            event_id: event_id.into(),
            user_id: user_id.into(),
            item_id: item_id.into(),
            timestamp,
            text: text.into(),
            rating: None,
            label: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_rating(mut self, rating: u8) -> Self {
        self.rating = Some(rating);
        self
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }
}

/// Prefix marking word-gram columns inside a [`FeatureVector`].
pub const WORDGRAM_PREFIX: &str = "wg:";

/// Named numeric features. Ordered so every traversal is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub BTreeMap<String, f64>);

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: f64) {
        self.0.insert(key.into(), value);
    }

    /// Missing features read as zero.
    pub fn get(&self, key: &str) -> f64 {
        self.0.get(key).copied().unwrap_or(0.0)
    }

    pub fn get_opt(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn is_wordgram(key: &str) -> bool {
        key.starts_with(WORDGRAM_PREFIX)
    }
}

impl FromIterator<(String, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<(&'a str, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (&'a str, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.to_owned(), v)).collect())
    }
}

/// Which data-set conventions apply (rating-derived features, min_df).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetProfile {
    #[default]
    Yelp,
    MediaWiki,
}

impl DatasetProfile {
    pub fn uses_rating(self) -> bool {
        matches!(self, DatasetProfile::Yelp)
    }

    /// Lower document-frequency bound for word-grams; MediaWiki texts are shorter.
    pub fn min_df(self) -> f64 {
        match self {
            DatasetProfile::Yelp => 0.1,
            DatasetProfile::MediaWiki => 0.01,
        }
    }
}

impl std::str::FromStr for DatasetProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "yelp" => Ok(DatasetProfile::Yelp),
            "mediawiki" => Ok(DatasetProfile::MediaWiki),
            other => Err(format!("unknown dataset profile `{other}`")),
        }
    }
}
