//! Natural-language descriptions: a deterministic template engine and a
//! pluggable external generator that falls back to the template on error.
//!
//! External prompt (JSON):
//!
//! ```json
//! {"task": "...", "temperature": 0.7,
//!  "prediction": {"label": "spam", "confidence": 0.75},
//!  "top_features": [{"feature_key": "emotion_anger", "count": 2, "value": 0.6, "severity": "green"}],
//!  "paths": [{"tree_id": 0, "steps": [...], "leaf_id": 4, "leaf_counts": {...}}]}
//! ```

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ExplanationPayload;
use crate::textfeat::readability::EFLAW_UNFAVORABLE;
use crate::types::WORDGRAM_PREFIX;

pub const NO_SPLIT_TEXT: &str = "No informative split; prediction from class prior.";
pub const DEFAULT_TEMPERATURE: f64 = 0.7;
const TOP_FEATURES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionSource {
    Template,
    External,
    TemplateFallback,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("generator timed out after {0:?}")]
    Timeout(Duration),
    #[error("generator request failed: {0}")]
    Request(String),
}

pub trait DescriptionGenerator: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, GeneratorError>;

    fn timeout(&self) -> Duration {
        Duration::from_secs(10)
    }
}

/// Canned generator for tests; records the last prompt.
#[derive(Debug, Default)]
pub struct MockGenerator {
    reply: Option<Result<String, GeneratorError>>,
    last_prompt: Mutex<Option<String>>,
}

impl MockGenerator {
    pub fn ok(text: impl Into<String>) -> Self {
        Self { reply: Some(Ok(text.into())), last_prompt: Mutex::new(None) }
    }

    pub fn failing(err: GeneratorError) -> Self {
        Self { reply: Some(Err(err)), last_prompt: Mutex::new(None) }
    }

    pub fn last_prompt(&self) -> Option<String> {
        self.last_prompt.lock().ok().and_then(|p| p.clone())
    }
}

impl DescriptionGenerator for MockGenerator {
    fn generate(&self, prompt: &str) -> Result<String, GeneratorError> {
        if let Ok(mut p) = self.last_prompt.lock() {
            *p = Some(prompt.to_owned());
        }
        self.reply.clone().unwrap_or_else(|| Err(GeneratorError::Request("no reply configured".into())))
    }
}

/// Readable name for a feature key.
pub fn humanize(key: &str) -> String {
    if let Some(gram) = key.strip_prefix(WORDGRAM_PREFIX) {
        return format!("the term \"{gram}\"");
    }
    let (scope, base) = match key.split_once(':') {
        Some(("user_avg", k)) => ("user average ", k),
        Some(("user_max", k)) => ("user maximum ", k),
        Some(("item_avg", k)) => ("item average ", k),
        Some(("item_max", k)) => ("item maximum ", k),
        Some(("item_rating_avg", k)) => ("same-rating average ", k),
        Some(("item_rating_max", k)) => ("same-rating maximum ", k),
        _ => ("", key),
    };
    let base = base.strip_prefix("emotion_").unwrap_or(base);
    format!("{scope}{}", base.replace('_', " "))
}

fn join_names(names: &[String]) -> String {
    match names {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Deterministic description of a payload.
pub fn template_description(payload: &ExplanationPayload) -> String {
    if payload.paths.iter().all(|p| p.steps.is_empty()) {
        return NO_SPLIT_TEXT.to_owned();
    }
    let pct = (payload.confidence * 100.0).round();
    let mut text = format!("Classified as {} with {pct:.0}% confidence", payload.label);
    let names: Vec<String> = payload.features.iter().take(TOP_FEATURES).map(|f| humanize(&f.feature_key)).collect();
    if names.is_empty() {
        text.push_str("; no greater-than splits on the decision path.");
    } else {
        text.push_str(&format!("; driven by high {}.", join_names(&names)));
    }
    match payload.eflaw {
        Some(v) if v > EFLAW_UNFAVORABLE => text.push_str(&format!(" Readability (EFLAW {v:.1}) is unfavorable.")),
        Some(v) => text.push_str(&format!(" Readability (EFLAW {v:.1}) is acceptable.")),
        None => text.push_str(" Readability n/a."),
    }
    if let Some(d) = payload.drift.as_ref().filter(|d| d.drift) {
        text.push_str(&format!(" Data drift detected at sample {}; the model was retrained.", d.sample_index));
    }
    text
}

#[derive(Serialize)]
struct Prompt<'a> {
    task: &'a str,
    temperature: f64,
    prediction: PromptPrediction,
    top_features: &'a [super::FeatureInsight],
    paths: &'a [super::DecisionPath],
}

#[derive(Serialize)]
struct PromptPrediction {
    label: crate::types::Label,
    confidence: f64,
}

pub fn build_prompt(payload: &ExplanationPayload) -> String {
    let prompt = Prompt {
        task: "Explain to a content moderator, in two or three sentences, why this review received this \
               classification. Use the decision paths and the most relevant features.",
        temperature: DEFAULT_TEMPERATURE,
        prediction: PromptPrediction { label: payload.label, confidence: payload.confidence },
        top_features: &payload.features,
        paths: &payload.paths,
    };
    serde_json::to_string(&prompt).unwrap_or_default()
}

/// Template text without a generator; otherwise the generator's reply
/// verbatim, or the template flagged as a fallback when it fails.
pub fn describe(
    payload: &ExplanationPayload,
    generator: Option<&dyn DescriptionGenerator>,
) -> (String, DescriptionSource, Option<String>) {
    let Some(generator) = generator else {
        return (template_description(payload), DescriptionSource::Template, None);
    };
    match generator.generate(&build_prompt(payload)) {
        Ok(text) => (text, DescriptionSource::External, None),
        Err(e) => {
            log::warn!("description generator failed: {e}");
            (template_description(payload), DescriptionSource::TemplateFallback, Some(e.to_string()))
        }
    }
}
