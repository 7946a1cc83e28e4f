//! JSON-over-HTTP service API.
//!
//! ```text
//! POST /api/session                  {study_id?, evaluator_id}  -> task payload
//! GET  /api/session/{id}                                        -> task payload
//! GET  /api/search?q=..&session=..                              -> {results:[{url,title,snippet}]}
//! POST /api/session/{id}/verdict     {label, justification, difficulty} -> session
//! POST /api/session/{id}/abandon                                -> session
//! GET  /api/study/{id}/report                                   -> analytics
//! ```

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{SearchHit, Session, StudyReport, TaskPayload, Verdict, Workbench, WorkbenchError};

pub struct ApiError(WorkbenchError);

impl From<WorkbenchError> for ApiError {
    fn from(e: WorkbenchError) -> Self {
        ApiError(e)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        use WorkbenchError::*;
        let (status, kind) = match &self.0 {
            UnknownStudy(_) | UnknownSession(_) => (StatusCode::NOT_FOUND, "not_found"),
            NoTasksRemaining(_) => (StatusCode::CONFLICT, "no_tasks_remaining"),
            SessionClosed(_) => (StatusCode::CONFLICT, "session_closed"),
            JustificationTooShort(_) => (StatusCode::UNPROCESSABLE_ENTITY, "justification_too_short"),
            InvalidRequest(_) | Search(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            Plan(_) => (StatusCode::BAD_REQUEST, "plan"),
            Log(_) | Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (status, Json(ErrorBody { error: self.0.to_string(), kind: kind.into() })).into_response()
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| WorkbenchError::InvalidRequest(e.body_text()).into())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StartRequest {
    #[serde(default)]
    pub study_id: Option<String>,
    pub evaluator_id: String,
}

/// Verdict fields are optional on the wire so that a missing field yields a
/// specific message.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct VerdictRequest {
    pub label: Option<String>,
    pub justification: Option<String>,
    pub difficulty: Option<String>,
}

impl VerdictRequest {
    pub fn into_verdict(self) -> Result<Verdict, WorkbenchError> {
        let missing = |f: &str| WorkbenchError::InvalidRequest(format!("missing {f}"));
        let label = self.label.ok_or_else(|| missing("label"))?.parse().map_err(WorkbenchError::InvalidRequest)?;
        let justification = self.justification.ok_or_else(|| missing("justification"))?;
        let difficulty =
            self.difficulty.ok_or_else(|| missing("difficulty"))?.parse().map_err(WorkbenchError::InvalidRequest)?;
        Ok(Verdict { label, justification, difficulty })
    }
}

#[derive(Debug, Deserialize)]
pub struct SearchParams {
    pub q: String,
    pub session: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<SearchHit>,
}

async fn start(
    State(wb): State<Arc<Workbench>>,
    payload: Result<Json<StartRequest>, JsonRejection>,
) -> Result<Json<TaskPayload>, ApiError> {
    let req = body(payload)?;
    let study_id = match req.study_id {
        Some(id) => id,
        None => {
            let ids = wb.study_ids();
            match ids.as_slice() {
                [only] => only.clone(),
                _ => return Err(WorkbenchError::InvalidRequest("study_id is required".into()).into()),
            }
        }
    };
    Ok(Json(wb.start_session(&study_id, &req.evaluator_id)?))
}

async fn payload(State(wb): State<Arc<Workbench>>, Path(id): Path<String>) -> Result<Json<TaskPayload>, ApiError> {
    Ok(Json(wb.session_payload(&id)?))
}

async fn search(
    State(wb): State<Arc<Workbench>>,
    Query(params): Query<SearchParams>,
) -> Result<Json<SearchResponse>, ApiError> {
    Ok(Json(SearchResponse { results: wb.record_search(&params.session, &params.q)? }))
}

async fn verdict(
    State(wb): State<Arc<Workbench>>,
    Path(id): Path<String>,
    payload: Result<Json<VerdictRequest>, JsonRejection>,
) -> Result<Json<Session>, ApiError> {
    let verdict = body(payload)?.into_verdict()?;
    Ok(Json(wb.submit_verdict(&id, verdict)?))
}

async fn abandon(State(wb): State<Arc<Workbench>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    Ok(Json(wb.abandon(&id)?))
}

async fn report(State(wb): State<Arc<Workbench>>, Path(id): Path<String>) -> Result<Json<StudyReport>, ApiError> {
    Ok(Json(wb.study_report(&id)?))
}

pub fn router(wb: Arc<Workbench>) -> Router {
    Router::new()
        .route("/api/session", post(start))
        .route("/api/session/{id}", get(payload))
        .route("/api/session/{id}/verdict", post(verdict))
        .route("/api/session/{id}/abandon", post(abandon))
        .route("/api/search", get(search))
        .route("/api/study/{id}/report", get(report))
        .with_state(wb)
}

pub async fn serve(wb: Arc<Workbench>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("workbench listening on {}", listener.local_addr()?);
    axum::serve(listener, router(wb)).await
}
