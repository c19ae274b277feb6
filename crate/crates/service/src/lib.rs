//! Moderator-facing service: a single writer runs the prequential pipeline,
//! an append-only journal makes runs replayable and an HTTP API serves
//! reviews, explanations, trees, alerts and metrics from published snapshots.

pub mod api;
pub mod generator;
pub mod journal;
pub mod state;
pub mod writer;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use revstream_core::explain::DescriptionGenerator;
use revstream_core::RawEvent;

pub use api::{router, AppState};
pub use journal::{replay, replay_path, Journal, JournalEntry};
pub use state::{Alert, EventRecord, ExportDocument, Feedback, MetricsReport, ServiceConfig, ServiceState, Snapshot};
pub use writer::{spawn_writer, Command, WriterHandle};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("missing or invalid admin token")]
    Unauthorized,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("replay: {0}")]
    Replay(String),
    #[error("internal: {0}")]
    Internal(String),
}

pub struct Service {
    pub writer: WriterHandle,
    pub app: AppState,
}

/// Starts the writer over `events` (journalled when `journal` is given) and
/// builds the HTTP state around it.
pub fn start(
    config: ServiceConfig,
    events: Vec<RawEvent>,
    journal: Option<&Path>,
    generator: Option<Arc<dyn DescriptionGenerator>>,
    admin_token: Option<String>,
) -> Result<Service, ServiceError> {
    let journal = journal.map(|p| Journal::create(p, &config)).transpose()?;
    let writer = spawn_writer(ServiceState::new(config), events, journal);
    let app = AppState { snapshots: writer.snapshots.clone(), commands: writer.commands.clone(), generator, admin_token };
    Ok(Service { writer, app })
}

/// Serves an already replayed state; nothing further is journalled.
pub fn start_replayed(
    state: ServiceState,
    generator: Option<Arc<dyn DescriptionGenerator>>,
    admin_token: Option<String>,
) -> Service {
    let writer = spawn_writer(state, Vec::new(), None);
    let app = AppState { snapshots: writer.snapshots.clone(), commands: writer.commands.clone(), generator, admin_token };
    Service { writer, app }
}

pub async fn serve(addr: SocketAddr, app: AppState) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
