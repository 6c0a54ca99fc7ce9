//! HTTP service for live protocol sessions.
//!
//! Routes, all under `/api`:
//!
//! - `POST /api/sessions` `{"hypothesis": "h"}` creates a session.
//! - `POST /api/sessions/{id}/words` `{"actions": "abab"}` scores one game.
//! - `GET /api/sessions/{id}` returns the session.
//! - `GET /api/curves/{meta}?step=0.01` samples the belief curves of a test.
//! - `GET /api/models` lists the class parameters and the game shape.

mod error;
mod resource;
mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use doxa_core::game_model::{Word, WordError};
use doxa_core::protocol::{sample_belief_curves, BeliefProfile, ProtocolConfig, ProtocolEngine, ProtocolError, ProtocolSession};
use doxa_core::PatientClass;
use rand::RngCore;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

pub use error::ApiError;
pub use resource::{round9, SessionMeta};
pub use store::Store;

/// Smallest accepted sampling step for the curve endpoint.
pub const MIN_CURVE_STEP: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory for session logs; `None` keeps sessions in memory only.
    pub data_dir: Option<PathBuf>,
    pub profile: BeliefProfile,
    pub protocol: ProtocolConfig,
    /// Origins allowed by CORS.
    pub cors_origins: Vec<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: None,
            profile: BeliefProfile::default(),
            protocol: ProtocolConfig::default(),
            cors_origins: vec!["http://localhost:5173".into(), "http://127.0.0.1:5173".into()],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("data directory: {0}")]
    Store(String),
    #[error("invalid CORS origin `{0}`")]
    Origin(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

type Snapshot = Arc<(SessionMeta, ProtocolSession)>;

struct Slot {
    writer: tokio::sync::Mutex<()>,
    current: RwLock<Snapshot>,
}

impl Slot {
    fn snapshot(&self) -> Snapshot {
        self.current.read().expect("snapshot lock").clone()
    }
}

struct AppState {
    engine: ProtocolEngine,
    store: Store,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

impl AppState {
    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions.read().expect("session table").get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn new_id() -> String {
    let mut bytes = [0u8; 16];
    rand::rngs::OsRng.fill_bytes(&mut bytes);
    URL_SAFE_NO_PAD.encode(bytes)
}

/// Builds the router, restoring any sessions stored in the data directory.
pub fn app(config: ServiceConfig) -> Result<Router, ServiceError> {
    let engine = ProtocolEngine::new(config.profile, config.protocol)?;
    let store = Store::new(config.data_dir)?;
    let mut sessions = HashMap::new();
    for (meta, session) in store.load_all(&engine).map_err(ServiceError::Store)? {
        let id = meta.id.clone();
        sessions.insert(
            id,
            Arc::new(Slot { writer: tokio::sync::Mutex::new(()), current: RwLock::new(Arc::new((meta, session))) }),
        );
    }
    if !sessions.is_empty() {
        log::info!("restored {} sessions", sessions.len());
    }
    let origins = config
        .cors_origins
        .iter()
        .map(|o| HeaderValue::from_str(o).map_err(|_| ServiceError::Origin(o.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let cors = CorsLayer::new()
        .allow_origin(origins)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([axum::http::header::CONTENT_TYPE]);
    let state = Arc::new(AppState { engine, store, sessions: RwLock::new(sessions) });
    Ok(Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/words", post(post_words))
        .route("/api/curves/{meta}", get(get_curves))
        .route("/api/models", get(get_models))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route") })
        .layer(cors)
        .with_state(state))
}

/// Serves `router` on an already bound listener until the process stops.
pub async fn serve(listener: tokio::net::TcpListener, router: Router) -> std::io::Result<()> {
    axum::serve(listener, router).await
}

/// Binds `addr`, reports the bound address and serves.
pub async fn run(config: ServiceConfig, addr: SocketAddr, on_bound: impl FnOnce(SocketAddr)) -> Result<(), ServiceError> {
    let router = app(config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    serve(listener, router).await?;
    Ok(())
}

fn parse_json(body: &Bytes) -> Result<Value, ApiError> {
    let v: Value = serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?;
    if !v.is_object() {
        return Err(ApiError::bad_request("expected a JSON object"));
    }
    Ok(v)
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let v = parse_json(&body)?;
    let raw = v.get("hypothesis").and_then(Value::as_str).ok_or_else(|| {
        ApiError::bad_request("field `hypothesis` (h, m or M) is required")
    })?;
    let hypothesis: PatientClass = raw.parse().map_err(|_| {
        ApiError::new(StatusCode::BAD_REQUEST, "unknown_class", format!("unknown class `{raw}`"))
            .with_detail(json!({ "expected": ["h", "m", "M"] }))
    })?;
    let now = now_ms();
    let meta = SessionMeta { id: new_id(), hypothesis, created_at_ms: now, updated_at_ms: now };
    state.store.save_meta(&meta).map_err(ApiError::internal)?;
    let session = state.engine.start_session(hypothesis);
    let body = resource::session_json(&meta, &session);
    let slot = Slot { writer: tokio::sync::Mutex::new(()), current: RwLock::new(Arc::new((meta.clone(), session))) };
    state.sessions.write().expect("session table").insert(meta.id.clone(), Arc::new(slot));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let snap = state.slot(&id)?.snapshot();
    Ok(Json(resource::session_json(&snap.0, &snap.1)))
}

fn word_error(e: &WordError, actions: &str) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_word", e.to_string())
        .with_detail(json!({ "actions": actions }))
}

async fn post_words(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let slot = state.slot(&id)?;
    let v = parse_json(&body)?;
    let actions = v
        .get("actions")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad_request("field `actions` (letters a, b, g, t) is required"))?;
    let expected = match v.get("expected_steps") {
        None | Some(Value::Null) => None,
        Some(x) => Some(x.as_u64().ok_or_else(|| ApiError::bad_request("`expected_steps` must be a count"))?),
    };
    let word: Word = actions.parse().map_err(|e| word_error(&e, actions))?;
    let _guard = slot.writer.try_lock().map_err(|_| ApiError::busy(&id))?;
    let snap = slot.snapshot();
    let (meta, session) = (&snap.0, &snap.1);
    if session.is_stopped() {
        return Err(ApiError::new(StatusCode::CONFLICT, "session_stopped", "the session has stopped")
            .with_detail(resource::stop_json(&session.stop)));
    }
    if let Some(n) = expected {
        if n != session.steps.len() as u64 {
            return Err(ApiError::new(StatusCode::CONFLICT, "step_conflict", "the session has moved on")
                .with_detail(json!({ "steps": session.steps.len(), "retry": true })));
        }
    }
    let next = state.engine.step(session, &word).map_err(|e| match e {
        ProtocolError::SessionStopped(_) => ApiError::new(StatusCode::CONFLICT, "session_stopped", e.to_string()),
        ProtocolError::EmptyWord | ProtocolError::UndefinedScore(_) | ProtocolError::WordNotAccepted { .. } => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_word", e.to_string())
                .with_detail(json!({ "actions": actions }))
        }
        other => ApiError::internal(other.to_string()),
    })?;
    let step = next.steps.last().expect("step just taken");
    state.store.append(&id, step).map_err(ApiError::internal)?;
    let meta = SessionMeta { updated_at_ms: now_ms().max(meta.created_at_ms), ..meta.clone() };
    state.store.save_meta(&meta).map_err(ApiError::internal)?;
    let mut body = resource::session_json(&meta, &next);
    body["last_step"] = resource::step_json(next.steps.len() - 1, step);
    *slot.current.write().expect("snapshot lock") = Arc::new((meta, next));
    Ok(Json(body))
}

async fn get_curves(
    State(state): State<Arc<AppState>>,
    Path(meta): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Value>, ApiError> {
    let class: PatientClass = meta.parse().map_err(|_| ApiError::not_found("meta-state", &meta))?;
    let step = match q.get("step") {
        None => 0.01,
        Some(s) => s.parse::<f64>().map_err(|_| ApiError::bad_request(format!("step `{s}` is not a number")))?,
    };
    if !(step.is_finite() && step >= MIN_CURVE_STEP) {
        return Err(ApiError::bad_request(format!("step must be at least {MIN_CURVE_STEP}")));
    }
    let rows = sample_belief_curves(state.engine.profile(), class, step).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(resource::curves_json(class, step, &rows)))
}

async fn get_models(State(state): State<Arc<AppState>>) -> Json<Value> {
    let states = PatientClass::ALL.map(|c| state.engine.model(c).num_states());
    Json(resource::models_json(state.engine.config().shape, &states))
}
