//! HTTP API.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | start a session, `201 {session_id, phase}` |
//! | GET | `/sessions/{id}` | state snapshot |
//! | GET | `/sessions/{id}/events?after=N` | journal lines as `data: <line>\n\n` |
//! | GET | `/sessions/{id}/artifacts/{kind}` | artifact JSON |
//! | POST | `/sessions/{id}/clarifications/{qid}/answer` | answer a question |
//! | POST | `/sessions/{id}/verdict` | approve or reject |
//! | POST | `/knowledge/documents` | ingest, `201 {chunk_ids}` |
//! | GET | `/knowledge/search?q=&role=&k=` | ranked chunks |

mod error;
pub mod sessions;
pub mod views;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::{Body, Bytes};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use maad_core::agent::CompletionBackend;
use maad_core::artifact::{canonicalize, package_digest};
use maad_core::kb::{KnowledgeIndex, SourceKind, DEFAULT_TOP_K};
use maad_core::orchestrator::{
    BackendSelector, Session, SessionConfig, SessionStore, StakeholderDecision,
};
use maad_core::Role;

use crate::setup::{BackendSpec, EngineOptions};
pub use error::ApiError;
use sessions::SessionHandle;
pub use sessions::{StakeholderVerdict, VERDICT_FILE};
pub use views::{Snapshot, ARTIFACT_KINDS};

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    pub data_dir: PathBuf,
    /// Layered roots for sessions configured with the replay backend.
    pub replay_roots: Vec<PathBuf>,
    pub engine: EngineOptions,
}

pub struct AppState {
    config: ServerConfig,
    kb: RwLock<Arc<KnowledgeIndex>>,
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
}

impl AppState {
    pub fn new(config: ServerConfig, kb: KnowledgeIndex) -> Arc<Self> {
        Arc::new(AppState {
            config,
            kb: RwLock::new(Arc::new(kb)),
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn kb(&self) -> Arc<KnowledgeIndex> {
        self.kb.read().expect("kb lock").clone()
    }

    fn session(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }

    fn backend(&self, selector: BackendSelector) -> Result<Arc<dyn CompletionBackend>, ApiError> {
        let spec = match selector {
            BackendSelector::Replay if self.config.replay_roots.is_empty() => {
                return Err(ApiError::new(
                    StatusCode::SERVICE_UNAVAILABLE,
                    "BackendUnavailable",
                    "server has no replay directory configured",
                ))
            }
            BackendSelector::Replay => BackendSpec::Replay(self.config.replay_roots.clone()),
            BackendSelector::Remote => BackendSpec::Remote,
            BackendSelector::Adversarial => {
                return Err(ApiError::validation(
                    "InvalidConfig",
                    "the adversarial backend is not served over HTTP",
                ))
            }
        };
        spec.build().map_err(|e| {
            ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "BackendUnavailable",
                e.to_string(),
            )
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/events", get(stream_events))
        .route("/sessions/{id}/artifacts/{kind}", get(get_artifact))
        .route(
            "/sessions/{id}/clarifications/{qid}/answer",
            post(answer_question),
        )
        .route("/sessions/{id}/verdict", post(record_verdict))
        .route("/knowledge/documents", post(ingest_document))
        .route("/knowledge/search", get(search_knowledge))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint") })
        .with_state(state)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::validation("InvalidBody", e.body_text()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub srs_text: String,
    #[serde(default)]
    pub config: Option<SessionConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub phase: String,
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let req = body(payload)?;
    let config = req.config.unwrap_or_default();
    if req.srs_text.trim().is_empty() {
        return Err(ApiError::validation("EmptySrs", "SRS text is empty"));
    }
    config.validate()?;
    let backend = app.backend(config.backend)?;
    let engine = app
        .config
        .engine
        .engine(app.kb(), backend, None)
        .map_err(ApiError::internal)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let store = SessionStore::create(&app.config.data_dir, &id)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let dir = store.dir().to_path_buf();
    let session = Session::start(
        &id,
        &req.srs_text,
        config,
        engine.clock.as_ref(),
        Some(store),
    )?;
    let phase = session.phase().to_string();
    let handle = SessionHandle::new(id.clone(), dir, engine, session);
    app.sessions
        .write()
        .expect("sessions lock")
        .insert(id.clone(), handle.clone());
    tracing::info!(session = %id, "session started");
    handle.drive();
    Ok((
        StatusCode::CREATED,
        Json(Created {
            session_id: id,
            phase,
        }),
    ))
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Snapshot>, ApiError> {
    let handle = app.session(&id)?;
    Ok(Json(views::snapshot(&handle.state(), handle.verdict())))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

/// Sends every journal line after `after` (default 0), then follows the
/// session live. The stream ends once the session is terminal and drained.
async fn stream_events(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok());
    let cursor = q.after.or(resume).unwrap_or(0);
    let rx = handle.subscribe();
    let stream = futures::stream::unfold(
        (handle, cursor, rx, false),
        |(handle, cursor, mut rx, done)| async move {
            if done {
                return None;
            }
            loop {
                rx.borrow_and_update();
                let lines = handle.lines_after(cursor);
                if !lines.is_empty() {
                    let next = cursor + lines.len() as u64;
                    let mut frame = String::new();
                    for line in lines {
                        frame.push_str("data: ");
                        frame.push_str(&line);
                        frame.push_str("\n\n");
                    }
                    return Some((
                        Ok::<_, std::convert::Infallible>(Bytes::from(frame)),
                        (handle, next, rx, false),
                    ));
                }
                let state = handle.state();
                if state.phase.is_terminal() && state.last_seq <= cursor {
                    return None;
                }
                if rx.changed().await.is_err() {
                    return None;
                }
            }
        },
    );
    Response::builder()
        .header(header::CONTENT_TYPE, "text/event-stream")
        .header(header::CACHE_CONTROL, "no-cache")
        .body(Body::from_stream(stream))
        .map_err(|e| ApiError::internal(e.to_string()))
}

async fn get_artifact(
    State(app): State<Arc<AppState>>,
    Path((id, kind)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let state = handle.state();
    if kind == "package" {
        let bytes = canonicalize(&state.package).map_err(|e| ApiError::internal(e.to_string()))?;
        let digest =
            package_digest(&state.package).map_err(|e| ApiError::internal(e.to_string()))?;
        return Ok((
            [
                (header::CONTENT_TYPE, "application/json".to_string()),
                (header::HeaderName::from_static("x-package-digest"), digest),
            ],
            bytes,
        )
            .into_response());
    }
    Ok(Json(views::artifact(&state, &kind)?).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Answer {
    text: String,
}

async fn answer_question(
    State(app): State<Arc<AppState>>,
    Path((id, qid)): Path<(String, String)>,
    payload: Result<Json<Answer>, JsonRejection>,
) -> Result<Json<Snapshot>, ApiError> {
    let handle = app.session(&id)?;
    let answer = body(payload)?;
    let worker = handle.clone();
    tokio::task::spawn_blocking(move || {
        worker.command(|s, engine| {
            s.submit_clarification_answer(engine.clock.as_ref(), &qid, &answer.text)
                .map(|_| ())
        })
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    handle.drive();
    Ok(Json(views::snapshot(&handle.state(), handle.verdict())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerdictRequest {
    decision: StakeholderDecision,
    #[serde(default)]
    comment: String,
}

async fn record_verdict(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<VerdictRequest>, JsonRejection>,
) -> Result<Json<Snapshot>, ApiError> {
    let handle = app.session(&id)?;
    let req = body(payload)?;
    let worker = handle.clone();
    let record = tokio::task::spawn_blocking(move || -> Result<StakeholderVerdict, ApiError> {
        let record = worker.current_verdict_record(req.decision, &req.comment);
        match req.decision {
            StakeholderDecision::Approve => {
                let phase = worker.state().phase;
                if phase != maad_core::orchestrator::Phase::Confirmed {
                    return Err(ApiError::invalid_state(format!(
                        "cannot approve in phase {phase}"
                    )));
                }
            }
            StakeholderDecision::Reject => {
                worker.command(|s, engine| {
                    s.reject(engine.clock.as_ref(), &req.comment).map(|_| ())
                })?;
            }
        }
        Ok(record)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    handle
        .record_verdict(record)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    handle.drive();
    Ok(Json(views::snapshot(&handle.state(), handle.verdict())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IngestRequest {
    text: String,
    source_kind: SourceKind,
    role_tags: Vec<Role>,
}

async fn ingest_document(
    State(app): State<Arc<AppState>>,
    payload: Result<Json<IngestRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let req = body(payload)?;
    let app2 = app.clone();
    let ids = tokio::task::spawn_blocking(move || -> Result<Vec<String>, ApiError> {
        let mut guard = app2.kb.write().expect("kb lock");
        let mut kb = (**guard).clone();
        let ids = kb.ingest(&req.text, req.source_kind, &req.role_tags)?;
        kb.save(&app2.config.data_dir)?;
        *guard = Arc::new(kb);
        Ok(ids)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(json!({ "chunk_ids": ids }))))
}

#[derive(Debug, Deserialize)]
struct SearchQuery {
    q: Option<String>,
    role: Option<String>,
    k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RankedChunk {
    pub chunk_id: String,
    pub score: f64,
    pub text: String,
    pub source_kind: SourceKind,
    pub doc_id: String,
}

async fn search_knowledge(
    State(app): State<Arc<AppState>>,
    Query(q): Query<SearchQuery>,
) -> Result<Json<Vec<RankedChunk>>, ApiError> {
    let query =
        q.q.filter(|s| !s.trim().is_empty())
            .ok_or_else(|| ApiError::validation("EmptyQuery", "q is required"))?;
    let role: Role = q
        .role
        .ok_or_else(|| ApiError::validation("InvalidRole", "role is required"))?
        .parse()
        .map_err(|e: String| ApiError::validation("InvalidRole", e))?;
    let kb = app.kb();
    let hits = kb.search(&query, role, q.k.unwrap_or(DEFAULT_TOP_K))?;
    Ok(Json(
        hits.into_iter()
            .filter_map(|h| {
                kb.chunk(&h.chunk_id).map(|c| RankedChunk {
                    chunk_id: h.chunk_id,
                    score: h.score,
                    text: c.text.clone(),
                    source_kind: c.source_kind,
                    doc_id: c.doc_id.clone(),
                })
            })
            .collect(),
    ))
}

/// Binds `addr` and serves until the process is interrupted.
pub async fn serve(app: Arc<AppState>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
