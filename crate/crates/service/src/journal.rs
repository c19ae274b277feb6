//! Append-only NDJSON journal and deterministic replay.
//!
//! The first line is a `config` entry. Each sample contributes an `event`
//! and a `prediction` line plus a `drift` line when the model was retrained;
//! moderator actions appear as `feedback` and `ack` lines at the position
//! where the writer applied them.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use revstream_core::eval::DriftEvent;
use revstream_core::learners::Prediction;
use revstream_core::RawEvent;

use crate::state::{ServiceConfig, ServiceState};
use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JournalEntry {
    Config { config: ServiceConfig },
    Event { seq: u64, event: RawEvent },
    Prediction { seq: u64, event_id: String, prediction: Prediction },
    Drift { alert_id: u64, drift: DriftEvent },
    Feedback {
        event_id: String,
        correct: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        moderator_id: Option<String>,
        ts: i64,
    },
    Ack { alert_id: u64, ts: i64 },
}

pub struct Journal {
    out: BufWriter<File>,
}

impl Journal {
    /// Creates (truncating) a journal and writes its config line.
    pub fn create(path: &Path, config: &ServiceConfig) -> Result<Self, ServiceError> {
        let file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        let mut j = Self { out: BufWriter::new(file) };
        j.append(&JournalEntry::Config { config: config.clone() })?;
        j.flush()?;
        Ok(j)
    }

    pub fn append(&mut self, entry: &JournalEntry) -> Result<(), ServiceError> {
        serde_json::to_writer(&mut self.out, entry)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), ServiceError> {
        self.out.flush()?;
        Ok(())
    }
}

/// Rebuilds service state from a journal, checking every logged prediction
/// and drift against the recomputed ones.
pub fn replay<R: BufRead>(reader: R) -> Result<ServiceState, ServiceError> {
    let mut lines = reader.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
    let parse = |n: usize, line: std::io::Result<String>| -> Result<JournalEntry, ServiceError> {
        serde_json::from_str(&line?).map_err(|e| ServiceError::Replay(format!("line {}: {e}", n + 1)))
    };
    let mut state = match lines.next() {
        Some((n, l)) => match parse(n, l)? {
            JournalEntry::Config { config } => ServiceState::new(config),
            _ => return Err(ServiceError::Replay("first line must be a config entry".into())),
        },
        None => return Err(ServiceError::Replay("empty journal".into())),
    };
    let mut pending: std::collections::VecDeque<JournalEntry> = Default::default();
    for (n, l) in lines {
        let entry = parse(n, l)?;
        let diverged = |what: &str| ServiceError::Replay(format!("line {}: {what} differs from recomputation", n + 1));
        match entry {
            JournalEntry::Config { .. } => return Err(ServiceError::Replay(format!("line {}: repeated config", n + 1))),
            JournalEntry::Event { seq, event } => {
                if !pending.is_empty() {
                    return Err(diverged("entries before this event"));
                }
                if seq != state.samples() {
                    return Err(ServiceError::Replay(format!("line {}: expected seq {}, got {seq}", n + 1, state.samples())));
                }
                pending.extend(state.ingest(&event).into_iter().skip(1));
            }
            logged @ (JournalEntry::Prediction { .. } | JournalEntry::Drift { .. }) => {
                if pending.pop_front().as_ref() != Some(&logged) {
                    return Err(diverged(if matches!(logged, JournalEntry::Drift { .. }) { "drift" } else { "prediction" }));
                }
            }
            JournalEntry::Feedback { event_id, correct, moderator_id, ts } => {
                state.apply_feedback(&event_id, correct, moderator_id, ts)?;
            }
            JournalEntry::Ack { alert_id, ts } => {
                state.acknowledge(alert_id, ts)?;
            }
        }
    }
    if !pending.is_empty() {
        return Err(ServiceError::Replay("journal ends before the last sample's entries".into()));
    }
    Ok(state)
}

pub fn replay_path(path: &Path) -> Result<ServiceState, ServiceError> {
    replay(std::io::BufReader::new(File::open(path)?))
}
