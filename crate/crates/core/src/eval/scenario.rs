//! Experimental scenarios and their reports.
//!
//! | scenario | threads | drift detection |
//! |----------|---------|-----------------|
//! | 1        | 1       | off             |
//! | 2        | N       | off             |
//! | 3        | N       | on              |
//! | 4        | 1       | on              |

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{Confusion, MetricsSummary};
use super::pipeline::{DetectorKind, DriftEvent, Pipeline, PipelineConfig};
use crate::drift::DriftReport;
use crate::select::SelectionSnapshot;
use super::EvalError;
use crate::types::{Label, RawEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: u8,
    pub threads: usize,
    pub pipeline: PipelineConfig,
}

impl ScenarioConfig {
    /// Builds a configuration; scenarios 1 and 2 switch drift detection off.
    pub fn new(scenario: u8, threads: usize, mut pipeline: PipelineConfig) -> Result<Self, EvalError> {
        if scenario <= 2 {
            pipeline.detector = DetectorKind::None;
        }
        let cfg = Self { scenario, threads, pipeline };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn drift_enabled(&self) -> bool {
        self.pipeline.detector != DetectorKind::None
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::Config(m.to_owned()));
        match self.scenario {
            1 | 4 if self.threads != 1 => bad("scenarios 1 and 4 run on a single thread"),
            1 | 2 if self.drift_enabled() => bad("scenarios 1 and 2 run without drift detection"),
            3 | 4 if !self.drift_enabled() => bad("scenarios 3 and 4 need a drift detector"),
            1..=4 if self.threads == 0 => bad("threads must be at least 1"),
            1..=4 => Ok(()),
            _ => bad("scenario must be 1, 2, 3 or 4"),
        }
    }
}

/// Consecutive blocks of near-equal size; the first `len % threads` blocks
/// get one extra sample. Empty blocks are dropped.
pub fn partition_chronological<T>(stream: &[T], threads: usize) -> Vec<&[T]> {
    let threads = threads.max(1);
    let base = stream.len() / threads;
    let extra = stream.len() % threads;
    let mut out = Vec::with_capacity(threads);
    let mut start = 0;
    for i in 0..threads {
        let len = base + usize::from(i < extra);
        if len == 0 {
            break;
        }
        out.push(&stream[start..start + len]);
        start += len;
    }
    out
}

/// Undersamples the majority class to the minority count, keeping
/// chronological order. Unlabelled events are discarded.
pub fn balanced_subset(events: &[RawEvent], seed: u64) -> Result<Vec<RawEvent>, EvalError> {
    let spam: Vec<usize> = (0..events.len()).filter(|&i| events[i].label == Some(Label::Spam)).collect();
    let ham: Vec<usize> = (0..events.len()).filter(|&i| events[i].label == Some(Label::NonSpam)).collect();
    let k = spam.len().min(ham.len());
    if k == 0 {
        return Err(EvalError::EmptyClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (minority, majority) = if spam.len() <= ham.len() { (spam, ham) } else { (ham, spam) };
    let mut keep: Vec<usize> = sample(&mut rng, majority.len(), k).into_iter().map(|j| majority[j]).collect();
    keep.extend(minority);
    keep.sort_by_key(|&i| (events[i].timestamp, i));
    Ok(keep.into_iter().map(|i| events[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreadReport {
    pub thread: usize,
    pub samples: u64,
    pub drifts: u64,
    pub confusion: Confusion,
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub logs: ThreadLogs,
}

/// Per-thread artefacts kept out of the report JSON.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThreadLogs {
    pub drifts: Vec<DriftEvent>,
    pub selections: Vec<SelectionSnapshot>,
    /// Filled when the pipeline records reports.
    pub reports: Vec<DriftReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: u8,
    pub model: String,
    pub detector: DetectorKind,
    pub threads: usize,
    pub samples: u64,
    pub accuracy: f64,
    pub f_nonspam: f64,
    pub f_spam: f64,
    pub macro_f: f64,
    pub runtime_seconds: f64,
    pub samples_per_second: f64,
    pub mean_sample_ms: f64,
    pub drifts_total: u64,
    pub drifts_per_thread: Vec<u64>,
    pub confusion: Confusion,
    pub per_thread: Vec<ThreadReport>,
}

impl ScenarioReport {
    pub fn metrics(&self) -> MetricsSummary {
        self.confusion.summary()
    }
}

fn thread_config(base: &PipelineConfig, thread: usize) -> PipelineConfig {
    let mut cfg = base.clone();
    cfg.seed = base.seed ^ (thread as u64).wrapping_mul(0x2545_F491_4F6C_DD1D);
    cfg
}

/// Runs one isolated pipeline per chronological block and sums the
/// per-thread confusion matrices.
pub fn run_scenario(cfg: &ScenarioConfig, events: &[RawEvent]) -> Result<ScenarioReport, EvalError> {
    cfg.validate()?;
    let started = Instant::now();
    let blocks = partition_chronological(events, cfg.threads);
    let per_thread: Vec<ThreadReport> = std::thread::scope(|s| {
        let handles: Vec<_> = blocks
            .iter()
            .enumerate()
            .map(|(i, block)| {
                let pcfg = thread_config(&cfg.pipeline, i);
                s.spawn(move || {
                    let t0 = Instant::now();
                    let mut p = Pipeline::new(pcfg);
                    p.run(block.iter());
                    ThreadReport {
                        thread: i,
                        samples: p.confusion().total(),
                        drifts: p.drifts().len() as u64,
                        confusion: *p.confusion(),
                        runtime_seconds: t0.elapsed().as_secs_f64(),
                        logs: ThreadLogs {
                            drifts: p.drifts().to_vec(),
                            selections: p.selections().to_vec(),
                            reports: p.reports().to_vec(),
                        },
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("pipeline thread panicked")).collect()
    });
    let runtime_seconds = started.elapsed().as_secs_f64();

    let mut confusion = Confusion::new();
    for t in &per_thread {
        confusion.merge(&t.confusion);
    }
    let m = confusion.summary();
    let drifts_per_thread: Vec<u64> = per_thread.iter().map(|t| t.drifts).collect();
    let processed = events.len() as u64;
    Ok(ScenarioReport {
        scenario: cfg.scenario,
        model: cfg.pipeline.model.to_string(),
        detector: cfg.pipeline.detector,
        threads: cfg.threads,
        samples: m.samples,
        accuracy: m.accuracy,
        f_nonspam: m.f_nonspam,
        f_spam: m.f_spam,
        macro_f: m.macro_f,
        runtime_seconds,
        samples_per_second: if runtime_seconds > 0.0 { processed as f64 / runtime_seconds } else { 0.0 },
        mean_sample_ms: if processed > 0 {
            per_thread.iter().map(|t| t.runtime_seconds).sum::<f64>() * 1e3 / processed as f64
        } else {
            0.0
        },
        drifts_total: drifts_per_thread.iter().sum(),
        drifts_per_thread,
        confusion,
        per_thread,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model: String,
    pub rows: Vec<ScenarioReport>,
}

/// Single-thread runs of the same stream under every detector (including
/// none), in [`DetectorKind::ALL`] order.
pub fn compare_detectors(base: &PipelineConfig, events: &[RawEvent]) -> Result<ComparisonReport, EvalError> {
    let mut rows = Vec::new();
    for d in DetectorKind::ALL {
        let pcfg = PipelineConfig { detector: d, ..base.clone() };
        let scenario = if d == DetectorKind::None { 1 } else { 4 };
        rows.push(run_scenario(&ScenarioConfig::new(scenario, 1, pcfg)?, events)?);
    }
    Ok(ComparisonReport { model: base.model.to_string(), rows })
}
