//! HTTP description generator, configured from the environment.
//!
//! `REVSTREAM_GENERATOR_URL` enables it; `REVSTREAM_GENERATOR_KEY` is sent as
//! a bearer token and `REVSTREAM_GENERATOR_TIMEOUT_SECS` overrides the 10 s
//! timeout. The request body is `{"prompt": <prompt JSON string>,
//! "temperature": 0.7}`; the reply is either `{"text": ...}` or a
//! completions-style `{"choices": [{"text": ...}]}`.

use std::time::Duration;

use revstream_core::explain::describe::DEFAULT_TEMPERATURE;
use revstream_core::explain::{DescriptionGenerator, GeneratorError};

pub const URL_VAR: &str = "REVSTREAM_GENERATOR_URL";
pub const KEY_VAR: &str = "REVSTREAM_GENERATOR_KEY";
pub const TIMEOUT_VAR: &str = "REVSTREAM_GENERATOR_TIMEOUT_SECS";

pub struct HttpGenerator {
    url: String,
    api_key: Option<String>,
    timeout: Duration,
    client: reqwest::blocking::Client,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Result<Self, GeneratorError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GeneratorError::Request(e.to_string()))?;
        Ok(Self { url: url.into(), api_key, timeout, client })
    }

    /// `None` when the URL variable is unset.
    pub fn from_env() -> Option<Result<Self, GeneratorError>> {
        let url = std::env::var(URL_VAR).ok().filter(|u| !u.is_empty())?;
        let key = std::env::var(KEY_VAR).ok().filter(|k| !k.is_empty());
        let secs = std::env::var(TIMEOUT_VAR).ok().and_then(|s| s.parse::<f64>().ok()).filter(|s| *s > 0.0);
        Some(Self::new(url, key, secs.map_or(Duration::from_secs(10), Duration::from_secs_f64)))
    }
}

fn extract_text(v: &serde_json::Value) -> Option<&str> {
    v.get("text").and_then(|t| t.as_str()).or_else(|| v.pointer("/choices/0/text").and_then(|t| t.as_str()))
}

impl DescriptionGenerator for HttpGenerator {
    fn generate(&self, prompt: &str) -> Result<String, GeneratorError> {
        let mut req = self
            .client
            .post(&self.url)
            .json(&serde_json::json!({ "prompt": prompt, "temperature": DEFAULT_TEMPERATURE }));
        if let Some(k) = &self.api_key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                GeneratorError::Timeout(self.timeout)
            } else {
                GeneratorError::Request(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(GeneratorError::Request(format!("HTTP {status}")));
        }
        let body: serde_json::Value = resp.json().map_err(|e| GeneratorError::Request(e.to_string()))?;
        extract_text(&body)
            .map(|t| t.trim().to_owned())
            .filter(|t| !t.is_empty())
            .ok_or_else(|| GeneratorError::Request("reply has no text".into()))
    }

    fn timeout(&self) -> Duration {
        self.timeout
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_shapes() {
        assert_eq!(extract_text(&serde_json::json!({"text": "a"})), Some("a"));
        assert_eq!(extract_text(&serde_json::json!({"choices": [{"text": "b"}]})), Some("b"));
        assert_eq!(extract_text(&serde_json::json!({"x": 1})), None);
    }

    #[test]
    fn unreachable_endpoint_is_request_error() {
        let g = HttpGenerator::new("http://127.0.0.1:9/", None, Duration::from_millis(500)).unwrap();
        assert!(g.generate("{}").is_err());
    }
}
