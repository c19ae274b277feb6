//! Streaming review-spam detection: text features, user/item profiles,
//! variance selection, incremental tree learners and drift detection.

pub mod drift;
pub mod eval;
pub mod explain;
pub mod ingest;
pub mod learners;
pub mod profiles;
pub mod select;
pub mod synth;
pub mod textfeat;
pub mod types;

pub use types::{DatasetProfile, FeatureVector, Label, RawEvent, WORDGRAM_PREFIX};
