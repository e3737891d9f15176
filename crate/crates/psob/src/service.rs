//! Local HTTP service behind the annotation UI.
//!
//! Sessions live in memory. Each session has its own lock, so stroke appends
//! to one session are serialised while other sessions proceed in parallel.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use psob_core::attention::Stroke;
use psob_core::augment::sample_seed;
use psob_core::Error;
use serde_json::json;
use tower_http::services::ServeDir;

use crate::session::{NewSession, Session};

pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    counter: AtomicU64,
    seed: u64,
    data_root: PathBuf,
}

impl AppState {
    pub fn new(data_root: impl Into<PathBuf>, seed: u64) -> Self {
        Self { sessions: RwLock::default(), counter: AtomicU64::new(0), seed, data_root: data_root.into() }
    }

    pub fn data_root(&self) -> &Path {
        &self.data_root
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))
    }

    fn insert(&self, spec: NewSession) -> Result<String, ApiError> {
        let mut table = self.sessions.write().expect("session table poisoned");
        let id = loop {
            let n = self.counter.fetch_add(1, Ordering::Relaxed);
            let id = format!("{:016x}", sample_seed(self.seed, n as usize));
            if !table.contains_key(&id) {
                break id;
            }
        };
        let session = Session::new(id.clone(), spec)?;
        table.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }
}

#[derive(Debug)]
pub struct ApiError(pub StatusCode, pub String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io(_) | Error::Png(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(e.status(), e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn lock(s: &Mutex<Session>) -> std::sync::MutexGuard<'_, Session> {
    s.lock().expect("session poisoned")
}

async fn healthz() -> &'static str {
    "ok"
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<NewSession>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(spec) = body?;
    let id = state.insert(spec)?;
    log::info!("session {id} created");
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))))
}

async fn add_stroke(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<Stroke>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(stroke) = body?;
    let session = state.session(&id)?;
    let count = lock(&session).add_stroke(stroke)?;
    Ok(Json(json!({ "stroke_count": count })))
}

async fn attention_map(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    let session = state.session(&id)?;
    let map = lock(&session).attention_map()?;
    Ok(([(header::CONTENT_TYPE, "image/png")], map.to_png()?))
}

async fn analysis(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    let session = state.session(&id)?;
    let a = lock(&session).analysis();
    Ok(Json(a))
}

async fn export(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<impl IntoResponse, ApiError> {
    let session = state.session(&id)?;
    let split = lock(&session).export()?;
    Ok(([(header::CONTENT_TYPE, "application/json")], split.to_canonical_json()))
}

/// Model inference is not part of this service. A deployment that has a
/// trained model can replace this handler; the UI falls back to plain
/// sketching when it sees 501.
async fn predict() -> ApiError {
    ApiError(StatusCode::NOT_IMPLEMENTED, "model inference is not available in this build".into())
}

pub fn router(state: Arc<AppState>) -> Router {
    let ui = ServeDir::new(state.data_root().join("ui"));
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/strokes", post(add_stroke))
        .route("/sessions/{id}/attention-map", get(attention_map))
        .route("/sessions/{id}/analysis", get(analysis))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/predict", post(predict))
        .route("/predict", post(predict))
        .fallback_service(ui)
        .with_state(state)
}

async fn shutdown_signal() {
    if let Err(e) = tokio::signal::ctrl_c().await {
        log::error!("cannot listen for shutdown signal: {e}");
        std::future::pending::<()>().await;
    }
    log::info!("shutting down");
}

/// Runs until Ctrl-C, then drains in-flight requests.
pub async fn serve(bind: SocketAddr, data_root: PathBuf, seed: u64) -> anyhow::Result<()> {
    let meta = std::fs::metadata(&data_root)
        .map_err(|e| anyhow::anyhow!("data root {}: {e}", data_root.display()))?;
    if !meta.is_dir() {
        anyhow::bail!("data root {} is not a directory", data_root.display());
    }
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| anyhow::anyhow!("cannot bind {bind}: {e}"))?;
    log::info!("listening on {}", listener.local_addr()?);
    let app = router(Arc::new(AppState::new(data_root, seed)));
    axum::serve(listener, app).with_graceful_shutdown(shutdown_signal()).await?;
    Ok(())
}
