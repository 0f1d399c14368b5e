//! HTTP routes. Indices in paths are 0-based.
//!
//! ```text
//! GET    /health                          -> "ok"
//! GET    /scales                          -> [Scale]
//! POST   /sessions                        {alternatives, scale} -> 201 SessionView
//! GET    /sessions/{id}                   -> SessionView
//! DELETE /sessions/{id}                   -> 204
//! PUT    /sessions/{id}/judgments/{i}/{j} {value: 3 | "1/3"} -> SessionReport
//! GET    /sessions/{id}/report            -> SessionReport
//! ```

use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::{JsonRejection, PathRejection};
use axum::extract::{Path, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use pcx_core::pcm::parse_ratio;
use pcx_core::scales::{builtin_scales, Scale};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::session::{Judgment, Session, SessionReport};
use crate::store::SessionStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub alternatives: Vec<String>,
    pub scale: String,
}

/// A judgment value: a JSON number, or a string holding a decimal or `p/q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JudgmentValue {
    Number(f64),
    Text(String),
}

impl JudgmentValue {
    fn resolve(&self) -> Result<f64> {
        match self {
            Self::Number(v) => Ok(*v),
            Self::Text(s) => parse_ratio(s).ok_or_else(|| {
                ServiceError::BadRequest(format!("`{s}` is not a positive number or fraction p/q"))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetJudgment {
    pub value: JudgmentValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub alternatives: Vec<String>,
    pub scale: Scale,
    pub judgments: Vec<Judgment>,
    pub pending: Vec<[usize; 2]>,
    pub created_at_ms: u64,
    pub updated_at_ms: u64,
}

impl From<Session> for SessionView {
    fn from(s: Session) -> Self {
        let pending = s.pending();
        Self {
            id: s.id,
            alternatives: s.alternatives,
            scale: s.scale,
            judgments: s.judgments,
            pending,
            created_at_ms: s.created_at_ms,
            updated_at_ms: s.updated_at_ms,
        }
    }
}

type AppState = Arc<SessionStore>;

fn body<T>(payload: std::result::Result<Json<T>, JsonRejection>) -> Result<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

fn path<T>(p: std::result::Result<Path<T>, PathRejection>) -> Result<T> {
    p.map(|Path(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

/// Runs store work off the async executor; report computation is CPU-bound.
async fn blocking<T, F>(f: F) -> Result<T>
where
    F: FnOnce() -> Result<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Storage(format!("worker failed: {e}")))?
}

async fn health() -> &'static str {
    "ok"
}

async fn scales() -> Json<Vec<Scale>> {
    Json(builtin_scales())
}

async fn create_session(
    State(store): State<AppState>,
    payload: std::result::Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>)> {
    let req = body(payload)?;
    let session = blocking(move || store.create(req.alternatives, &req.scale)).await?;
    tracing::info!(id = %session.id, n = session.n(), scale = session.scale.name(), "session created");
    Ok((StatusCode::CREATED, Json(session.into())))
}

async fn get_session(
    State(store): State<AppState>,
    id: std::result::Result<Path<String>, PathRejection>,
) -> Result<Json<SessionView>> {
    let id = path(id)?;
    Ok(Json(blocking(move || store.session(&id)).await?.into()))
}

async fn delete_session(
    State(store): State<AppState>,
    id: std::result::Result<Path<String>, PathRejection>,
) -> Result<StatusCode> {
    let id = path(id)?;
    blocking(move || store.delete(&id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn set_judgment(
    State(store): State<AppState>,
    p: std::result::Result<Path<(String, usize, usize)>, PathRejection>,
    payload: std::result::Result<Json<SetJudgment>, JsonRejection>,
) -> Result<Json<SessionReport>> {
    let (id, i, j) = path(p)?;
    let value = body(payload)?.value.resolve()?;
    Ok(Json(
        blocking(move || store.set_judgment(&id, i, j, value)).await?,
    ))
}

async fn get_report(
    State(store): State<AppState>,
    id: std::result::Result<Path<String>, PathRejection>,
) -> Result<Json<SessionReport>> {
    let id = path(id)?;
    Ok(Json(blocking(move || store.report(&id)).await?))
}

async fn log_request(req: Request, next: Next) -> Response {
    let (method, uri) = (req.method().clone(), req.uri().clone());
    let start = Instant::now();
    let resp = next.run(req).await;
    tracing::info!(
        %method,
        path = %uri.path(),
        status = resp.status().as_u16(),
        elapsed_us = start.elapsed().as_micros() as u64,
        "request"
    );
    resp
}

async fn not_found() -> impl IntoResponse {
    ServiceError::NotFound("no such route".into()).into_response()
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/scales", get(scales))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/judgments/{i}/{j}", put(set_judgment))
        .route("/sessions/{id}/report", get(get_report))
        .fallback(not_found)
        .layer(middleware::from_fn(log_request))
        .with_state(store)
}
