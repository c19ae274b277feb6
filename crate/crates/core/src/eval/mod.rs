//! Prequential evaluation, metrics and the experimental scenarios.

pub mod metrics;
pub mod pipeline;
pub mod scenario;

use thiserror::Error;

pub use metrics::{Confusion, MetricsSummary};
pub use pipeline::{DetectorKind, DriftEvent, Pipeline, PipelineConfig, StepOutcome};
pub use scenario::{
    balanced_subset, compare_detectors, partition_chronological, run_scenario, ComparisonReport, ScenarioConfig,
    ScenarioReport, ThreadLogs, ThreadReport,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("a class has no labelled samples")]
    EmptyClass,
}
