//! The prequential pipeline: features → selection → predict → metrics →
//! drift detection → train → profile label bookkeeping.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::Confusion;
use super::EvalError;
use crate::drift::{Adwin, DetectorSignal, DriftReport, Eddm, WindowConfig, WindowState};
use crate::learners::{default_grid, grid_search_stream, HyperParams, ModelKind, OnlineModel, Prediction};
use crate::profiles::{enrich, ProfileGraph};
use crate::select::{project, RunningVariance, SelectionSnapshot};
use crate::textfeat::{build_wordgrams, extract_content_features, VocabState, WordGramRow};
use crate::types::{DatasetProfile, FeatureVector, Label, RawEvent, WORDGRAM_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    None,
    Proposed,
    Eddm,
    Adwin,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [DetectorKind::None, DetectorKind::Proposed, DetectorKind::Eddm, DetectorKind::Adwin];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::None => "none",
            DetectorKind::Proposed => "proposed",
            DetectorKind::Eddm => "eddm",
            DetectorKind::Adwin => "adwin",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "off" => Ok(DetectorKind::None),
            "proposed" | "window" => Ok(DetectorKind::Proposed),
            "eddm" => Ok(DetectorKind::Eddm),
            "adwin" => Ok(DetectorKind::Adwin),
            _ => Err(EvalError::Config(format!("unknown detector `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub model: ModelKind,
    pub params: HyperParams,
    pub detector: DetectorKind,
    pub seed: u64,
    pub profile: DatasetProfile,
    pub window: WindowConfig,
    pub variance_threshold: f64,
    pub reselect_every: u64,
    /// Retrain window for EDDM without an open warning.
    pub fallback_window: usize,
    /// `None` uses [`default_grid`].
    pub grid: Option<Vec<HyperParams>>,
    /// Keep every per-sample [`DriftReport`] of the proposed detector.
    #[serde(default)]
    pub record_reports: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Arfc,
            params: HyperParams::default(),
            detector: DetectorKind::Proposed,
            seed: 0,
            profile: DatasetProfile::Yelp,
            window: WindowConfig::default(),
            variance_threshold: 0.0,
            reselect_every: 500,
            fallback_window: 500,
            grid: None,
            record_reports: false,
        }
    }
}

/// A detected drift and the retrain it triggered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    pub sample_index: u64,
    pub event_id: String,
    pub detector: DetectorKind,
    /// Proposed detector only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DriftReport>,
    pub retrain_window: usize,
    pub params: HyperParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Position of the event in the pipeline's input.
    pub event_index: u64,
    pub event_id: String,
    pub prediction: Prediction,
    /// `None` for unlabelled events.
    pub correct: Option<bool>,
    /// Model input after selection.
    pub features: FeatureVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftEvent>,
}

#[derive(Debug, Clone)]
enum DetectorState {
    Off,
    Proposed(Box<WindowState>),
    Eddm { eddm: Eddm, warning_since: Option<u64> },
    Adwin(Adwin),
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: PipelineConfig,
    model: OnlineModel,
    params: HyperParams,
    vocab: VocabState,
    graph: ProfileGraph,
    variance: RunningVariance,
    selected: BTreeSet<String>,
    detector: DetectorState,
    buffer: VecDeque<(FeatureVector, Label)>,
    confusion: Confusion,
    events_seen: u64,
    labeled_seen: u64,
    drifts: Vec<DriftEvent>,
    selections: Vec<SelectionSnapshot>,
    last_report: Option<DriftReport>,
    reports: Vec<DriftReport>,
    frozen: bool,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Self {
        let detector = match cfg.detector {
            DetectorKind::None => DetectorState::Off,
            DetectorKind::Proposed => DetectorState::Proposed(Box::new(WindowState::new(cfg.window))),
            DetectorKind::Eddm => DetectorState::Eddm { eddm: Eddm::new(), warning_since: None },
            DetectorKind::Adwin => DetectorState::Adwin(Adwin::default()),
        };
        Self {
            model: OnlineModel::new(cfg.model, cfg.params, cfg.seed),
            params: cfg.params,
            vocab: VocabState::new(cfg.profile.min_df(), 0.7),
            graph: ProfileGraph::new(),
            variance: RunningVariance::new(),
            selected: BTreeSet::new(),
            detector,
            buffer: VecDeque::new(),
            confusion: Confusion::new(),
            events_seen: 0,
            labeled_seen: 0,
            drifts: Vec::new(),
            selections: Vec::new(),
            last_report: None,
            reports: Vec::new(),
            frozen: false,
            cfg,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn model(&self) -> &OnlineModel {
        &self.model
    }

    pub fn params(&self) -> &HyperParams {
        &self.params
    }

    pub fn graph(&self) -> &ProfileGraph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut ProfileGraph {
        &mut self.graph
    }

    pub fn confusion(&self) -> &Confusion {
        &self.confusion
    }

    pub fn events_seen(&self) -> u64 {
        self.events_seen
    }

    pub fn drifts(&self) -> &[DriftEvent] {
        &self.drifts
    }

    pub fn selections(&self) -> &[SelectionSnapshot] {
        &self.selections
    }

    pub fn selected(&self) -> &BTreeSet<String> {
        &self.selected
    }

    pub fn last_report(&self) -> Option<&DriftReport> {
        self.last_report.as_ref()
    }

    /// Empty unless `record_reports` is set.
    pub fn reports(&self) -> &[DriftReport] {
        &self.reports
    }

    /// A frozen pipeline still predicts, scores and observes its detector,
    /// but neither trains nor retrains the model.
    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Full feature vector for `event` (profiles read, then updated).
    fn featurize(&mut self, event: &RawEvent) -> (FeatureVector, WordGramRow) {
        let cf = extract_content_features(event, self.cfg.profile);
        let row = build_wordgrams(&event.text, &mut self.vocab);
        let mut fv = enrich(event, &cf, &mut self.graph);
        for (g, c) in row.iter() {
            fv.insert(format!("{WORDGRAM_PREFIX}{g}"), f64::from(c));
        }
        (fv, row)
    }

    fn reselect(&mut self) {
        self.selected = self.variance.selected(self.cfg.variance_threshold);
        self.selections.push(SelectionSnapshot::capture(self.events_seen, &self.variance, &self.selected));
    }

    /// One test-then-train step.
    pub fn step(&mut self, event: &RawEvent) -> StepOutcome {
        self.step_inspect(event, |_, _, _| {})
    }

    /// [`Pipeline::step`], calling `inspect` with the prediction-time model,
    /// the projected features and the prediction before any training.
    pub fn step_inspect<F>(&mut self, event: &RawEvent, inspect: F) -> StepOutcome
    where
        F: FnOnce(&OnlineModel, &FeatureVector, &Prediction),
    {
        let event_index = self.events_seen;
        let (full, row) = self.featurize(event);
        self.variance.observe(&full);
        self.events_seen += 1;
        if self.events_seen < self.cfg.reselect_every {
            self.selected = self.variance.selected(self.cfg.variance_threshold);
        } else if self.events_seen % self.cfg.reselect_every.max(1) == 0 {
            self.reselect();
        }

        let x = project(&full, &self.selected);
        let prediction = self.model.predict_proba_one(&x);
        inspect(&self.model, &x, &prediction);

        let Some(label) = event.label else {
            return StepOutcome {
                event_index,
                event_id: event.event_id.clone(),
                prediction,
                correct: None,
                features: x,
                drift: None,
            };
        };

        let correct = prediction.label == label;
        self.confusion.add(label, prediction.label);
        let sample_index = self.labeled_seen;
        self.labeled_seen += 1;
        self.buffer.push_back((full, label));
        while self.buffer.len() > self.cfg.window.max_width.max(self.cfg.fallback_window) {
            self.buffer.pop_front();
        }

        let retrain = match &mut self.detector {
            DetectorState::Off => None,
            DetectorState::Proposed(ws) => {
                let report = ws.observe(row, label, prediction.label);
                let w = report.w_after;
                let drift = report.drift;
                if self.cfg.record_reports {
                    self.reports.push(report.clone());
                }
                self.last_report = Some(report);
                drift.then_some(w)
            }
            DetectorState::Eddm { eddm, warning_since } => match eddm.observe(!correct) {
                DetectorSignal::Drift => {
                    let w = warning_since.map_or(self.cfg.fallback_window, |s| (sample_index - s + 1) as usize);
                    *warning_since = None;
                    Some(w)
                }
                DetectorSignal::Warning => {
                    warning_since.get_or_insert(sample_index);
                    None
                }
                DetectorSignal::Normal => {
                    *warning_since = None;
                    None
                }
            },
            DetectorState::Adwin(a) => a.update(f64::from(u8::from(correct))).then(|| a.width()),
        };

        let drift = match retrain {
            _ if self.frozen => None,
            Some(w) => {
                let w = w.clamp(1, self.cfg.window.max_width);
                Some(self.retrain(sample_index, &event.event_id, w))
            }
            None => {
                self.model.learn_one(&x, label);
                None
            }
        };
        self.graph.record_label(&event.user_id, label);

        StepOutcome { event_index, event_id: event.event_id.clone(), prediction, correct: Some(correct), features: x, drift }
    }

    /// Reselects features, grid-searches over the trailing `width` samples
    /// and replaces the model with a fresh one trained on them.
    fn retrain(&mut self, sample_index: u64, event_id: &str, width: usize) -> DriftEvent {
        self.reselect();
        let start = self.buffer.len().saturating_sub(width);
        let window: Vec<(FeatureVector, Label)> =
            self.buffer.iter().skip(start).map(|(fv, y)| (project(fv, &self.selected), *y)).collect();
        let grid = self.cfg.grid.clone().unwrap_or_else(|| default_grid(self.cfg.model));
        let seed = self.cfg.seed.wrapping_add(self.drifts.len() as u64 + 1);
        self.params = grid_search_stream(self.cfg.model, &window, &grid, self.params, seed);
        let mut model = OnlineModel::new(self.cfg.model, self.params, seed);
        for (fv, y) in &window {
            model.learn_one(fv, *y);
        }
        self.model = model;
        let ev = DriftEvent {
            sample_index,
            event_id: event_id.to_owned(),
            detector: self.cfg.detector,
            report: self.last_report.clone().filter(|_| self.cfg.detector == DetectorKind::Proposed),
            retrain_window: window.len(),
            params: self.params,
        };
        log::info!("drift at sample {sample_index} ({}): retrained on {} samples", self.cfg.detector, window.len());
        self.drifts.push(ev.clone());
        ev
    }

    pub fn run<'a>(&mut self, events: impl IntoIterator<Item = &'a RawEvent>) -> Vec<StepOutcome> {
        events.into_iter().map(|e| self.step(e)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(i: usize, spam: bool) -> RawEvent {
        let text = if spam { "buy cheap pills now great deal" } else { "the pasta was fresh and the staff friendly" };
        RawEvent::new(format!("e{i}"), format!("u{}", i % 7), format!("i{}", i % 3), i as i64 * 60, text)
            .with_rating(if spam { 5 } else { 4 })
            .with_label(if spam { Label::Spam } else { Label::NonSpam })
    }

    fn cfg(detector: DetectorKind) -> PipelineConfig {
        PipelineConfig {
            model: ModelKind::Htc,
            params: HyperParams { grace_period: 50, ..Default::default() },
            detector,
            window: WindowConfig { cold_start: 50, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn learns_trivial_stream() {
        let mut p = Pipeline::new(cfg(DetectorKind::None));
        let events: Vec<RawEvent> = (0..4000).map(|i| event(i, i % 2 == 0)).collect();
        let out = p.run(&events);
        let late = out[3900..].iter().filter(|o| o.correct == Some(true)).count();
        assert!(late >= 95, "{late}");
        assert_eq!(p.confusion().total(), 4000);
    }

    #[test]
    fn unlabeled_events_only_predict() {
        let mut p = Pipeline::new(cfg(DetectorKind::Proposed));
        let mut e = event(0, true);
        e.label = None;
        let o = p.step(&e);
        assert!(o.correct.is_none());
        assert_eq!(p.confusion().total(), 0);
        assert_eq!(p.model().samples_seen(), 0);
    }

    #[test]
    fn stationary_stream_has_no_drift() {
        for d in [DetectorKind::Proposed, DetectorKind::Eddm, DetectorKind::Adwin] {
            let mut p = Pipeline::new(cfg(d));
            let events: Vec<RawEvent> = (0..300).map(|i| event(i, false)).collect();
            p.run(&events);
            assert!(p.drifts().is_empty(), "{d}");
        }
    }

    #[test]
    fn detector_parse() {
        assert_eq!("ADWIN".parse::<DetectorKind>().unwrap(), DetectorKind::Adwin);
        assert!("ddm".parse::<DetectorKind>().is_err());
    }
}
