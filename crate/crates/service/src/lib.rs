//! HTTP/JSON API over live game sessions.
//!
//! | method | path                        | body / query                      |
//! |--------|-----------------------------|-----------------------------------|
//! | POST   | `/sessions`                 | `{game, config, seed?, human?}`   |
//! | GET    | `/sessions/{id}/state`      |                                   |
//! | GET    | `/sessions/{id}/candidates` | `?samples=&seed=`                 |
//! | POST   | `/sessions/{id}/explain`    | `{type, params}`                  |
//! | POST   | `/sessions/{id}/act`        | `{action}`                        |
//!
//! Errors: 404 unknown session, 409 illegal action, 422 malformed body or
//! argument, 503 language-model endpoint failure.
//!
//! Explanations run on a read lock of the session, so concurrent explain
//! calls see the same snapshot; actions take the write lock.

pub mod error;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::RwLock;
use tower_http::cors::{Any, CorsLayer};

use interplay_core::Parallelism;
use interplay_games::dynamic::Limits;

pub use error::ApiError;
pub use session::{read_events, replay, Event, Session};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    /// Largest `k` an explanation request may ask for.
    pub max_k: usize,
    /// Rollout workers per request (0 = all cores).
    pub workers: usize,
    /// Where session event logs go; no logs when `None`.
    pub log_dir: Option<PathBuf>,
    /// Allowed browser origin; any origin when `None`.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            max_k: Limits::default().max_k,
            workers: 0,
            log_dir: None,
            cors_origin: None,
        }
    }
}

type Shared = Arc<RwLock<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Shared>>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            sessions: Arc::default(),
            config: Arc::new(config),
        }
    }

    async fn session(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions.read().await.get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    fn limits(&self) -> Limits {
        Limits {
            max_k: self.config.max_k,
        }
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match state.config.cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(origin)) => cors.allow_origin(origin),
        _ => cors.allow_origin(Any),
    };
    Router::new()
        .route("/health", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/sessions", post(create))
        .route("/sessions/{id}/state", get(state_view))
        .route("/sessions/{id}/candidates", get(candidates))
        .route("/sessions/{id}/explain", post(explain))
        .route("/sessions/{id}/act", post(act))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    if let Some(dir) = &config.log_dir {
        std::fs::create_dir_all(dir)?;
    }
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Runs CPU-heavy work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

#[derive(Deserialize)]
struct CreateBody {
    game: String,
    #[serde(default)]
    config: Value,
    seed: Option<u64>,
    #[serde(default)]
    human: usize,
}

async fn create(
    State(app): State<AppState>,
    body: Result<Json<CreateBody>, JsonRejection>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let Json(body) = body?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let seed = body.seed.unwrap_or_else(rand::random);
    let parallelism = Parallelism::workers(app.config.workers);
    let log_dir = app.config.log_dir.clone();
    let session_id = id.clone();
    let session = blocking(move || {
        Session::create(session_id, &body.game, body.config, seed, body.human, parallelism, log_dir.as_deref())
            .map_err(ApiError::from)
    })
    .await?;
    let view = session_json(&session);
    app.sessions.write().await.insert(id, Arc::new(RwLock::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

fn session_json(s: &Session) -> Value {
    json!({
        "session_id": s.id,
        "human": s.human,
        "seed": s.seed,
        "state": s.game.view(),
    })
}

async fn state_view(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = app.session(&id).await?;
    let s = session.read().await;
    Ok(Json(session_json(&s)))
}

#[derive(Deserialize)]
struct CandidateQuery {
    samples: Option<usize>,
    seed: Option<u64>,
}

async fn candidates(
    State(app): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<CandidateQuery>, QueryRejection>,
) -> Result<Json<Value>, ApiError> {
    let Query(q) = query?;
    let samples = q.samples.unwrap_or(200);
    if samples > app.config.max_k {
        return Err(ApiError::malformed(format!("samples = {samples} exceeds the server cap of {}", app.config.max_k)));
    }
    let s = app.session(&id).await?.read_owned().await;
    blocking(move || {
        let seed = q.seed.unwrap_or(s.seed);
        Ok(Json(s.game.candidates(s.human, samples, seed)?))
    })
    .await
}

#[derive(Deserialize)]
struct ExplainBody {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    params: Value,
}

async fn explain(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ExplainBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(body) = body?;
    let limits = app.limits();
    let s = app.session(&id).await?.read_owned().await;
    let params = if body.params.is_null() { json!({}) } else { body.params };
    blocking(move || {
        let fingerprint = s.game.fingerprint();
        let out = s.game.explain(&body.kind, &params, limits)?;
        if s.game.fingerprint() != fingerprint {
            return Err(ApiError::internal("explanation changed the session state"));
        }
        s.record(&Event::Explain {
            kind: body.kind,
            params,
            fingerprint,
        })?;
        Ok(Json(out))
    })
    .await
}

#[derive(Deserialize)]
struct ActBody {
    action: Value,
}

async fn act(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<ActBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(body) = body?;
    let mut s = app.session(&id).await?.write_owned().await;
    blocking(move || {
        let record = s.act(body.action)?;
        let mut out = json!({
            "session_id": s.id,
            "step": record,
            "state": s.game.view(),
        });
        if record.terminal {
            out["rewards"] = json!(record.rewards);
        }
        Ok(Json(out))
    })
    .await
}
