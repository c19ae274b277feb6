//! The single writer: owns [`ServiceState`], drains moderator commands
//! between samples and publishes snapshots.

use std::sync::mpsc;
use std::sync::Arc;
use std::thread::JoinHandle;

use revstream_core::RawEvent;
use tokio::sync::{oneshot, watch};

use crate::journal::{Journal, JournalEntry};
use crate::state::{Alert, EventRecord, ServiceState, Snapshot};
use crate::ServiceError;

pub type Reply<T> = oneshot::Sender<Result<T, ServiceError>>;

pub enum Command {
    Feedback { event_id: String, correct: bool, moderator_id: Option<String>, reply: Reply<Arc<EventRecord>> },
    Ack { alert_id: u64, reply: Reply<Alert> },
    Shutdown,
}

pub struct WriterHandle {
    pub commands: mpsc::Sender<Command>,
    pub snapshots: watch::Receiver<Arc<Snapshot>>,
    pub join: JoinHandle<Result<(), ServiceError>>,
}

impl WriterHandle {
    /// Stops the writer once queued commands are handled.
    pub fn shutdown(self) -> Result<(), ServiceError> {
        let _ = self.commands.send(Command::Shutdown);
        self.join.join().map_err(|_| ServiceError::Internal("writer thread panicked".into()))?
    }
}

struct Writer {
    state: ServiceState,
    journal: Option<Journal>,
    publish: watch::Sender<Arc<Snapshot>>,
}

impl Writer {
    fn log(&mut self, entry: &JournalEntry) -> Result<(), ServiceError> {
        match &mut self.journal {
            Some(j) => j.append(entry),
            None => Ok(()),
        }
    }

    fn publish(&mut self, finished: bool) -> Result<(), ServiceError> {
        if let Some(j) = &mut self.journal {
            j.flush()?;
        }
        self.publish.send_replace(Arc::new(self.state.snapshot(finished)));
        Ok(())
    }

    /// Returns false on shutdown.
    fn handle(&mut self, cmd: Command, finished: bool) -> Result<bool, ServiceError> {
        let now = chrono::Utc::now().timestamp();
        match cmd {
            Command::Feedback { event_id, correct, moderator_id, reply } => {
                let res = self.state.apply_feedback(&event_id, correct, moderator_id, now);
                let res = match res {
                    Ok((rec, entry)) => {
                        self.log(&entry)?;
                        self.publish(finished)?;
                        Ok(rec)
                    }
                    Err(e) => Err(e),
                };
                let _ = reply.send(res);
            }
            Command::Ack { alert_id, reply } => {
                let res = match self.state.acknowledge(alert_id, now) {
                    Ok((alert, entry)) => {
                        if let Some(entry) = entry {
                            self.log(&entry)?;
                            self.publish(finished)?;
                        }
                        Ok(alert)
                    }
                    Err(e) => Err(e),
                };
                let _ = reply.send(res);
            }
            Command::Shutdown => return Ok(false),
        }
        Ok(true)
    }

    fn run(mut self, events: Vec<RawEvent>, commands: mpsc::Receiver<Command>, snapshot_every: usize) -> Result<(), ServiceError> {
        let every = snapshot_every.max(1);
        for (i, event) in events.iter().enumerate() {
            while let Ok(cmd) = commands.try_recv() {
                if !self.handle(cmd, false)? {
                    return self.publish(false);
                }
            }
            for entry in self.state.ingest(event) {
                self.log(&entry)?;
            }
            if (i + 1) % every == 0 {
                self.publish(false)?;
            }
        }
        self.publish(true)?;
        log::info!("stream finished after {} samples", self.state.samples());
        while let Ok(cmd) = commands.recv() {
            if !self.handle(cmd, true)? {
                break;
            }
        }
        Ok(())
    }
}

/// Starts the writer thread over `events`, optionally journalling to `journal`.
pub fn spawn_writer(state: ServiceState, events: Vec<RawEvent>, journal: Option<Journal>) -> WriterHandle {
    let snapshot_every = state.config().snapshot_every;
    let finished = events.is_empty();
    let (publish, snapshots) = watch::channel(Arc::new(state.snapshot(finished)));
    let (commands, rx) = mpsc::channel();
    let writer = Writer { state, journal, publish };
    let join = std::thread::Builder::new()
        .name("revstream-writer".into())
        .spawn(move || {
            let res = writer.run(events, rx, snapshot_every);
            if let Err(e) = &res {
                log::error!("writer stopped: {e}");
            }
            res
        })
        .expect("spawn writer thread");
    WriterHandle { commands, snapshots, join }
}
