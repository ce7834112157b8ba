//! HTTP+JSON API over [`SessionService`].
//!
//! ```text
//! GET  /rulebooks                      list of {id, version}
//! POST /sessions                       {rulebook, name?, description?, classification_profile?, linked_device_class?}
//! GET  /sessions/{id}                  session state with the current question or verdict
//! POST /sessions/{id}/answers          {node, answer}
//! POST /sessions/{id}/evidence         EvidenceItem
//! GET  /sessions/{id}/verdict          Verdict, once finalized
//! GET  /sessions/{id}/report?format=   json (default) or md
//! ```
//!
//! Every error body is `{"code": ..., "message": ...}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mdsw_core::session::{CaseHeader, SessionError, SessionService};
use mdsw_core::{ClassificationProfile, EvidenceItem, ReportFormat, RiskClass};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    status: u16,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.to_owned(),
            message: message.into(),
            status: status.as_u16(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid-request", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownRulebook(_)
            | SessionError::UnknownSession(_)
            | SessionError::NotFinalized(_) => StatusCode::NOT_FOUND,
            SessionError::Finalized(_) | SessionError::NotOnPath(_) => StatusCode::CONFLICT,
            SessionError::UnknownNode(_) | SessionError::InvalidRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            SessionError::InvalidEvidence(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Eval(_) | SessionError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

// Parse bodies ourselves so malformed JSON gets the same error shape as
// everything else.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

// Session calls touch the filesystem and may wait on a per-session lock.
async fn blocking<T, F>(svc: &Arc<SessionService>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&SessionService) -> Result<T, SessionError> + Send + 'static,
{
    let svc = Arc::clone(svc);
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    rulebook: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    classification_profile: Option<ClassificationProfile>,
    #[serde(default)]
    linked_device_class: Option<RiskClass>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitAnswer {
    node: String,
    answer: bool,
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

async fn list_rulebooks(State(svc): State<Arc<SessionService>>) -> impl IntoResponse {
    Json(svc.rulebooks())
}

async fn create_session(
    State(svc): State<Arc<SessionService>>,
    bytes: Bytes,
) -> ApiResult<impl IntoResponse> {
    let req: CreateSession = body(&bytes)?;
    let header = CaseHeader {
        name: req.name,
        description: req.description,
        classification_profile: req.classification_profile,
        linked_device_class: req.linked_device_class,
    };
    let view = blocking(&svc, move |s| s.create_session(&req.rulebook, header)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&svc, move |s| s.get_session(&id)).await?))
}

async fn submit_answer(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult<impl IntoResponse> {
    let req: SubmitAnswer = body(&bytes)?;
    let view = blocking(&svc, move |s| s.submit_answer(&id, &req.node, req.answer)).await?;
    Ok(Json(view))
}

async fn attach_evidence(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> ApiResult<impl IntoResponse> {
    let item: EvidenceItem = body(&bytes)?;
    Ok(Json(
        blocking(&svc, move |s| s.attach_evidence(&id, item)).await?,
    ))
}

async fn get_verdict(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(blocking(&svc, move |s| s.get_verdict(&id)).await?))
}

async fn get_report(
    State(svc): State<Arc<SessionService>>,
    Path(id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> ApiResult<Response> {
    let format: ReportFormat = q
        .format
        .as_deref()
        .unwrap_or("json")
        .parse()
        .map_err(ApiError::bad_request)?;
    let text = blocking(&svc, move |s| s.render_report(&id, format)).await?;
    let content_type = match format {
        ReportFormat::Json => "application/json",
        ReportFormat::Markdown => "text/markdown; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], text).into_response())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such route")
}

pub fn router(svc: Arc<SessionService>) -> Router {
    Router::new()
        .route("/rulebooks", get(list_rulebooks))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/sessions/{id}/evidence", post(attach_evidence))
        .route("/sessions/{id}/verdict", get(get_verdict))
        .route("/sessions/{id}/report", get(get_report))
        .fallback(not_found)
        .with_state(svc)
}

/// Serve the API on an already bound listener until the process ends.
pub async fn serve(listener: TcpListener, svc: Arc<SessionService>) -> std::io::Result<()> {
    axum::serve(listener, router(svc)).await
}
