//! Writer-owned service state and the immutable snapshots readers see.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use revstream_core::eval::{Confusion, DetectorKind, DriftEvent, Pipeline, PipelineConfig};
use revstream_core::explain::{explain, model_paths, DecisionPath, ExplainConfig, ExplainInput, ExplanationPayload, UserHistory};
use revstream_core::learners::{ExportedTree, HyperParams, ModelKind, Prediction};
use revstream_core::textfeat::extract_content_features;
use revstream_core::{Label, RawEvent};

use crate::journal::JournalEntry;
use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub pipeline: PipelineConfig,
    /// Samples between snapshot publications.
    pub snapshot_every: usize,
    pub explain: ExplainConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { pipeline: PipelineConfig::default(), snapshot_every: 50, explain: ExplainConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback {
    pub correct: bool,
    /// Label implied by the feedback.
    pub label: Label,
    pub ts: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moderator_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub event: RawEvent,
    pub prediction: Prediction,
    /// `None` for unlabelled events.
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alert_id: Option<u64>,
    pub feedback: Option<Feedback>,
    pub explanation: ExplanationPayload,
}

/// Listing view of an [`EventRecord`] without the explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub seq: u64,
    pub event_id: String,
    pub user_id: String,
    pub item_id: String,
    pub timestamp: i64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<u8>,
    pub label: Option<Label>,
    pub predicted: Label,
    pub confidence: f64,
    pub correct: Option<bool>,
    pub feedback: Option<Feedback>,
}

impl From<&EventRecord> for RecordSummary {
    fn from(r: &EventRecord) -> Self {
        Self {
            seq: r.seq,
            event_id: r.event.event_id.clone(),
            user_id: r.event.user_id.clone(),
            item_id: r.event.item_id.clone(),
            timestamp: r.event.timestamp,
            text: r.event.text.clone(),
            rating: r.event.rating,
            label: r.event.label,
            predicted: r.prediction.label,
            confidence: r.prediction.proba.max(),
            correct: r.correct,
            feedback: r.feedback.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub alert_id: u64,
    pub drift: DriftEvent,
    pub acknowledged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acknowledged_at: Option<i64>,
}

/// Deterministic metrics: no wall-clock fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: ModelKind,
    pub detector: DetectorKind,
    pub params: HyperParams,
    pub samples: u64,
    pub labeled: u64,
    pub accuracy: f64,
    pub f_nonspam: f64,
    pub f_spam: f64,
    pub macro_f: f64,
    pub confusion: Confusion,
    pub drifts: usize,
    pub alerts_open: usize,
    pub feedback_count: usize,
    pub n_trees: usize,
    pub selected_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub config: ServiceConfig,
    pub metrics: MetricsReport,
    pub records: Vec<EventRecord>,
    pub alerts: Vec<Alert>,
    pub trees: Vec<ExportedTree>,
}

/// What API handlers read. Cheap to clone; never mutated once published.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub config: Arc<ServiceConfig>,
    pub finished: bool,
    pub records: im::Vector<Arc<EventRecord>>,
    pub index: im::OrdMap<String, usize>,
    pub alerts: im::Vector<Alert>,
    pub trees: Arc<Vec<ExportedTree>>,
    pub metrics: MetricsReport,
}

impl Snapshot {
    pub fn record(&self, event_id: &str) -> Option<&Arc<EventRecord>> {
        self.index.get(event_id).and_then(|&i| self.records.get(i))
    }

    pub fn export(&self) -> ExportDocument {
        ExportDocument {
            config: (*self.config).clone(),
            metrics: self.metrics.clone(),
            records: self.records.iter().map(|r| (**r).clone()).collect(),
            alerts: self.alerts.iter().cloned().collect(),
            trees: (*self.trees).clone(),
        }
    }
}

pub struct ServiceState {
    config: Arc<ServiceConfig>,
    pipeline: Pipeline,
    history: UserHistory,
    records: im::Vector<Arc<EventRecord>>,
    index: im::OrdMap<String, usize>,
    alerts: im::Vector<Alert>,
}

impl ServiceState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            pipeline: Pipeline::new(config.pipeline.clone()),
            config: Arc::new(config),
            history: UserHistory::new(),
            records: im::Vector::new(),
            index: im::OrdMap::new(),
            alerts: im::Vector::new(),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn samples(&self) -> u64 {
        self.pipeline.events_seen()
    }

    /// Runs one prequential step and returns the journal entries it produced.
    pub fn ingest(&mut self, event: &RawEvent) -> Vec<JournalEntry> {
        let seq = self.pipeline.events_seen();
        let mut paths: Vec<DecisionPath> = Vec::new();
        let out = self.pipeline.step_inspect(event, |model, x, _| paths = model_paths(model, x));

        let cf = extract_content_features(event, self.config.pipeline.profile);
        let input = ExplainInput {
            event_id: &event.event_id,
            user_id: &event.user_id,
            prediction: out.prediction,
            paths: &paths,
            features: &out.features,
            history: Some(&self.history),
            eflaw: cf.readability_defined.then_some(cf.eflaw),
            drift: self.pipeline.last_report(),
        };
        let explanation = explain(&input, &self.config.explain, None);
        self.history.observe(&event.user_id, &out.features);

        let mut entries = vec![
            JournalEntry::Event { seq, event: event.clone() },
            JournalEntry::Prediction { seq, event_id: event.event_id.clone(), prediction: out.prediction },
        ];
        let alert_id = out.drift.map(|drift| {
            let alert_id = self.alerts.len() as u64;
            entries.push(JournalEntry::Drift { alert_id, drift: drift.clone() });
            self.alerts.push_back(Alert { alert_id, drift, acknowledged: false, acknowledged_at: None });
            alert_id
        });
        let record = EventRecord {
            seq,
            event: event.clone(),
            prediction: out.prediction,
            correct: out.correct,
            alert_id,
            feedback: None,
            explanation,
        };
        if self.index.contains_key(&event.event_id) {
            log::warn!("duplicate event id `{}`; lookups keep the first", event.event_id);
        } else {
            self.index.insert(event.event_id.clone(), self.records.len());
        }
        self.records.push_back(Arc::new(record));
        entries
    }

    /// Records moderator feedback and corrects the user's label statistics.
    /// The learner is not retrained.
    pub fn apply_feedback(
        &mut self,
        event_id: &str,
        correct: bool,
        moderator_id: Option<String>,
        ts: i64,
    ) -> Result<(Arc<EventRecord>, JournalEntry), ServiceError> {
        let &i = self.index.get(event_id).ok_or_else(|| ServiceError::NotFound(format!("review `{event_id}`")))?;
        let old = &self.records[i];
        if old.feedback.is_some() {
            return Err(ServiceError::Conflict(format!("review `{event_id}` already has feedback")));
        }
        let label = if correct { old.prediction.label } else { old.prediction.label.flipped() };
        self.pipeline.graph_mut().override_label(&old.event.user_id, old.event.label, label);
        let mut rec = (**old).clone();
        rec.feedback = Some(Feedback { correct, label, ts, moderator_id: moderator_id.clone() });
        let rec = Arc::new(rec);
        self.records.set(i, rec.clone());
        Ok((rec, JournalEntry::Feedback { event_id: event_id.to_owned(), correct, moderator_id, ts }))
    }

    /// Acknowledging twice is a no-op that returns no journal entry.
    pub fn acknowledge(&mut self, alert_id: u64, ts: i64) -> Result<(Alert, Option<JournalEntry>), ServiceError> {
        let i = usize::try_from(alert_id).ok().filter(|&i| i < self.alerts.len());
        let i = i.ok_or_else(|| ServiceError::NotFound(format!("alert {alert_id}")))?;
        let alert = &mut self.alerts[i];
        if alert.acknowledged {
            return Ok((alert.clone(), None));
        }
        alert.acknowledged = true;
        alert.acknowledged_at = Some(ts);
        Ok((alert.clone(), Some(JournalEntry::Ack { alert_id, ts })))
    }

    pub fn metrics(&self) -> MetricsReport {
        let p = &self.pipeline;
        let c = *p.confusion();
        let s = c.summary();
        MetricsReport {
            model: p.config().model,
            detector: p.config().detector,
            params: *p.params(),
            samples: p.events_seen(),
            labeled: c.total(),
            accuracy: s.accuracy,
            f_nonspam: s.f_nonspam,
            f_spam: s.f_spam,
            macro_f: s.macro_f,
            confusion: c,
            drifts: p.drifts().len(),
            alerts_open: self.alerts.iter().filter(|a| !a.acknowledged).count(),
            feedback_count: self.records.iter().filter(|r| r.feedback.is_some()).count(),
            n_trees: p.model().n_trees(),
            selected_features: p.selected().len(),
        }
    }

    pub fn snapshot(&self, finished: bool) -> Snapshot {
        Snapshot {
            config: self.config.clone(),
            finished,
            records: self.records.clone(),
            index: self.index.clone(),
            alerts: self.alerts.clone(),
            trees: Arc::new(self.pipeline.model().export_trees()),
            metrics: self.metrics(),
        }
    }
}
