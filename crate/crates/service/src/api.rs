//! HTTP routes. Handlers only read published snapshots; mutations are sent
//! to the writer as commands.

use std::collections::HashMap;
use std::sync::{mpsc, Arc};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{oneshot, watch};

use revstream_core::explain::{describe, DescriptionGenerator};
use revstream_core::ingest::parse_timestamp;
use revstream_core::learners::ExportedTree;

use crate::state::{RecordSummary, Snapshot};
use crate::writer::Command;
use crate::ServiceError;

pub const DEFAULT_PAGE_SIZE: usize = 20;
pub const MAX_PAGE_SIZE: usize = 200;

#[derive(Clone)]
pub struct AppState {
    pub snapshots: watch::Receiver<Arc<Snapshot>>,
    pub commands: mpsc::Sender<Command>,
    pub generator: Option<Arc<dyn DescriptionGenerator>>,
    /// When set, POST routes require `Authorization: Bearer <token>`.
    pub admin_token: Option<String>,
}

impl AppState {
    fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshots.borrow().clone()
    }

    fn authorize(&self, headers: &HeaderMap) -> Result<(), ServiceError> {
        let Some(token) = &self.admin_token else { return Ok(()) };
        let given = headers.get("authorization").and_then(|v| v.to_str().ok()).and_then(|v| v.strip_prefix("Bearer "));
        if given == Some(token.as_str()) {
            Ok(())
        } else {
            Err(ServiceError::Unauthorized)
        }
    }

    async fn send<T>(&self, make: impl FnOnce(oneshot::Sender<Result<T, ServiceError>>) -> Command) -> Result<T, ServiceError> {
        let (tx, rx) = oneshot::channel();
        self.commands.send(make(tx)).map_err(|_| ServiceError::Internal("writer stopped".into()))?;
        rx.await.map_err(|_| ServiceError::Internal("writer dropped the request".into()))?
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
    status: u16,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string(), status: status.as_u16() })).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/reviews", get(list_reviews))
        .route("/reviews/:id", get(get_review))
        .route("/reviews/:id/explanation", get(get_explanation))
        .route("/reviews/:id/feedback", post(post_feedback))
        .route("/trees", get(get_tree))
        .route("/alerts", get(list_alerts))
        .route("/alerts/:id/ack", post(ack_alert))
        .route("/metrics", get(metrics))
        .route("/export", get(export))
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReviewPage {
    pub page: usize,
    pub page_size: usize,
    pub total: usize,
    pub pages: usize,
    pub items: Vec<RecordSummary>,
}

fn param<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> Result<Option<T>, ServiceError> {
    match q.get(key).map(|s| s.trim()).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| ServiceError::BadRequest(format!("invalid `{key}`: `{s}`"))),
    }
}

/// A bare `YYYY-MM-DD` upper bound covers the whole day.
fn time_param(q: &HashMap<String, String>, key: &str, end_of_day: bool) -> Result<Option<i64>, ServiceError> {
    let Some(s) = q.get(key).map(|s| s.trim()).filter(|s| !s.is_empty()) else { return Ok(None) };
    let t = parse_timestamp(s).map_err(|e| ServiceError::BadRequest(format!("invalid `{key}`: {e}")))?;
    let bare_date = s.len() == 10 && s.as_bytes()[4] == b'-';
    Ok(Some(if end_of_day && bare_date { t + 86_399 } else { t }))
}

/// `query` matches review text case-insensitively; `from`/`to` bound the
/// timestamp inclusively; `page` starts at 1. Items keep stream order.
async fn list_reviews(State(st): State<AppState>, Query(q): Query<HashMap<String, String>>) -> Result<Json<ReviewPage>, ServiceError> {
    let needle = q.get("query").map(|s| s.trim().to_lowercase()).filter(|s| !s.is_empty());
    let from = time_param(&q, "from", false)?;
    let to = time_param(&q, "to", true)?;
    let page: usize = param(&q, "page")?.unwrap_or(1);
    let page_size: usize = param(&q, "page_size")?.unwrap_or(DEFAULT_PAGE_SIZE);
    if page == 0 || page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(ServiceError::BadRequest(format!("page >= 1 and 1 <= page_size <= {MAX_PAGE_SIZE} required")));
    }
    let snap = st.snapshot();
    let hits: Vec<_> = snap
        .records
        .iter()
        .filter(|r| from.map_or(true, |f| r.event.timestamp >= f))
        .filter(|r| to.map_or(true, |t| r.event.timestamp <= t))
        .filter(|r| needle.as_ref().map_or(true, |n| r.event.text.to_lowercase().contains(n)))
        .collect();
    let total = hits.len();
    let items = hits.iter().skip((page - 1) * page_size).take(page_size).map(|r| RecordSummary::from(r.as_ref())).collect();
    Ok(Json(ReviewPage { page, page_size, total, pages: total.div_ceil(page_size), items }))
}

async fn get_review(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let snap = st.snapshot();
    let rec = snap.record(&id).ok_or_else(|| ServiceError::NotFound(format!("review `{id}`")))?;
    Ok(Json(rec.as_ref()).into_response())
}

async fn get_explanation(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let snap = st.snapshot();
    let rec = snap.record(&id).ok_or_else(|| ServiceError::NotFound(format!("review `{id}`")))?;
    let mut payload = rec.explanation.clone();
    if let Some(generator) = st.generator.clone() {
        let limit = generator.timeout() + std::time::Duration::from_secs(1);
        let base = payload.clone();
        let task = tokio::task::spawn_blocking(move || describe(&base, Some(generator.as_ref())));
        match tokio::time::timeout(limit, task).await {
            Ok(Ok((text, source, err))) => {
                payload.description = text;
                payload.description_source = source;
                payload.generator_error = err;
            }
            _ => {
                payload.description_source = revstream_core::explain::DescriptionSource::TemplateFallback;
                payload.generator_error = Some(format!("generator timed out after {limit:?}"));
            }
        }
    }
    Ok(Json(payload).into_response())
}

#[derive(Debug, Deserialize)]
struct FeedbackBody {
    correct: bool,
    #[serde(default)]
    moderator_id: Option<String>,
}

async fn post_feedback(
    State(st): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ServiceError> {
    st.authorize(&headers)?;
    let body: FeedbackBody =
        serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(format!("feedback body: {e}")))?;
    let rec = st
        .send(|reply| Command::Feedback { event_id: id, correct: body.correct, moderator_id: body.moderator_id, reply })
        .await?;
    Ok(Json(rec.as_ref()).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TreeView {
    pub index: usize,
    pub n_trees: usize,
    pub tree: ExportedTree,
}

async fn get_tree(State(st): State<AppState>, Query(q): Query<HashMap<String, String>>) -> Result<Json<TreeView>, ServiceError> {
    let index: usize = param(&q, "index")?.unwrap_or(0);
    let snap = st.snapshot();
    let tree = snap
        .trees
        .get(index)
        .cloned()
        .ok_or_else(|| ServiceError::NotFound(format!("tree {index} (model has {})", snap.trees.len())))?;
    Ok(Json(TreeView { index, n_trees: snap.trees.len(), tree }))
}

async fn list_alerts(State(st): State<AppState>) -> Response {
    let snap = st.snapshot();
    let alerts: Vec<_> = snap.alerts.iter().cloned().collect();
    Json(alerts).into_response()
}

async fn ack_alert(State(st): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> Result<Response, ServiceError> {
    st.authorize(&headers)?;
    let alert_id: u64 = id.parse().map_err(|_| ServiceError::BadRequest(format!("invalid alert id `{id}`")))?;
    let alert = st.send(|reply| Command::Ack { alert_id, reply }).await?;
    Ok(Json(alert).into_response())
}

async fn metrics(State(st): State<AppState>) -> Response {
    Json(st.snapshot().metrics.clone()).into_response()
}

async fn export(State(st): State<AppState>) -> Response {
    Json(st.snapshot().export()).into_response()
}
