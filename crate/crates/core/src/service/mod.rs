//! HTTP/JSON API for stepping through replays of loaded traces.
//!
//! Traces are immutable and shared. Each session wraps one
//! [`ReplaySession`] behind its own lock, so requests to different sessions
//! never contend. Sessions idle for longer than the configured TTL are
//! dropped lazily on the next request that touches the session table.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

use crate::clock::Timestamp;
use crate::codec;
use crate::replay::{ReplayError, ReplaySession};
use crate::sim::{read_trace, EventKind, EventRecord, SimError, Trace};

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(3600);
pub const DEFAULT_PAGE: usize = 100;
pub const MAX_PAGE: usize = 1000;

struct SessionEntry {
    trace_id: String,
    session: ReplaySession,
    last_used: Instant,
}

pub struct AppState {
    traces: BTreeMap<String, Arc<Trace>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    ttl: Duration,
}

impl AppState {
    pub fn new(traces: BTreeMap<String, Arc<Trace>>) -> Self {
        AppState {
            traces,
            sessions: Mutex::new(HashMap::new()),
            ttl: DEFAULT_SESSION_TTL,
        }
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = ttl;
        self
    }

    /// Loads every `*.jsonl` file in `dir`; the file stem is the trace id.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, SimError> {
        let mut traces = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let trace = read_trace(&path)
                .map_err(|e| SimError::Schema(format!("{}: {e}", path.display())))?;
            traces.insert(id.to_string(), Arc::new(trace));
        }
        Ok(AppState::new(traces))
    }

    pub fn trace_ids(&self) -> impl Iterator<Item = &str> {
        self.traces.keys().map(String::as_str)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        let mut table = self.sessions.lock().expect("session table poisoned");
        let now = Instant::now();
        let ttl = self.ttl;
        table.retain(|_, s| {
            // A session busy in another request is in use, not idle.
            s.try_lock()
                .map_or(true, |e| now.duration_since(e.last_used) < ttl)
        });
        table
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("session {id}")))
    }
}

#[derive(Debug)]
enum ApiError {
    NotFound(String),
    BadRequest(String),
    NotInFrontline { event_id: u64, frontline: Vec<u64> },
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    event_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frontline: Option<Vec<u64>>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(what) => (
                StatusCode::NOT_FOUND,
                ErrorBody {
                    error: "not_found",
                    message: format!("unknown {what}"),
                    event_id: None,
                    frontline: None,
                },
            ),
            ApiError::BadRequest(message) => (
                StatusCode::BAD_REQUEST,
                ErrorBody {
                    error: "bad_request",
                    message,
                    event_id: None,
                    frontline: None,
                },
            ),
            ApiError::NotInFrontline { event_id, frontline } => (
                StatusCode::CONFLICT,
                ErrorBody {
                    error: "not_in_frontline",
                    message: format!("event {event_id} is not in the current frontline"),
                    event_id: Some(event_id),
                    frontline: Some(frontline),
                },
            ),
        };
        (status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::BadRequest(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::BadRequest(r.body_text())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceInfo {
    pub trace_id: String,
    pub n: usize,
    pub epsilon_us: u64,
    pub interval_us: u64,
    pub alpha: f64,
    pub delta_us: u64,
    pub event_count: usize,
}

/// An event as served: the trace record plus the timestamp's word form.
#[derive(Debug, Serialize, Deserialize)]
pub struct EventJson {
    #[serde(flatten)]
    pub record: EventRecord,
    pub repcl_words: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EventPage {
    pub trace_id: String,
    pub from: usize,
    pub total: usize,
    pub events: Vec<EventJson>,
}

/// Frontline entry.
#[derive(Debug, Serialize, Deserialize)]
pub struct EventSummary {
    pub event_id: u64,
    pub proc: usize,
    pub kind: EventKind,
    pub pt: u64,
    pub mx: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub repcl: Timestamp,
    pub repcl_words: Vec<String>,
}

/// Full snapshot of a session, returned by every session endpoint.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionResource {
    pub session_id: String,
    pub trace_id: String,
    pub seed: u64,
    pub chosen_prefix: Vec<u64>,
    pub frontline: Vec<EventSummary>,
    pub remaining_count: usize,
    pub complete: bool,
}

fn words(trace: &Trace, ts: &Timestamp) -> Vec<String> {
    // Loaded traces were checked against their layout; an encoding failure
    // here would mean a hand-built trace, so fall back to no words.
    codec::encode(ts, &trace.layout)
        .map(|w| codec::to_hex(&w))
        .unwrap_or_default()
}

fn snapshot(id: &str, e: &SessionEntry) -> SessionResource {
    let trace = e.session.trace();
    let frontline = e
        .session
        .frontline_indices()
        .map(|i| {
            let ev = &trace.events[i];
            EventSummary {
                event_id: ev.event_id,
                proc: ev.proc,
                kind: ev.kind,
                pt: ev.pt,
                mx: ev.repcl.mx(),
                label: ev.label.clone(),
                repcl: ev.repcl.clone(),
                repcl_words: words(trace, &ev.repcl),
            }
        })
        .collect();
    SessionResource {
        session_id: id.to_string(),
        trace_id: e.trace_id.clone(),
        seed: e.session.seed(),
        chosen_prefix: e.session.prefix(),
        frontline,
        remaining_count: e.session.remaining_count(),
        complete: e.session.is_complete(),
    }
}

type Shared = Arc<AppState>;

async fn list_traces(State(st): State<Shared>) -> Json<Vec<TraceInfo>> {
    Json(
        st.traces
            .iter()
            .map(|(id, t)| TraceInfo {
                trace_id: id.clone(),
                n: t.clock().n(),
                epsilon_us: t.clock().epsilon_time(),
                interval_us: t.clock().interval(),
                alpha: t.config.alpha,
                delta_us: t.config.delta,
                event_count: t.events.len(),
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct PageQuery {
    #[serde(default)]
    from: usize,
    limit: Option<usize>,
}

async fn trace_events(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<PageQuery>, QueryRejection>,
) -> Result<Json<EventPage>, ApiError> {
    let Query(q) = query?;
    let trace = st
        .traces
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("trace {id}")))?;
    let limit = q.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let events = trace
        .events
        .iter()
        .skip(q.from)
        .take(limit)
        .map(|e| EventJson {
            record: e.clone(),
            repcl_words: words(trace, &e.repcl),
        })
        .collect();
    Ok(Json(EventPage {
        trace_id: id,
        from: q.from,
        total: trace.events.len(),
        events,
    }))
}

#[derive(Deserialize)]
struct CreateSession {
    trace_id: String,
    #[serde(default)]
    seed: u64,
}

async fn create_session(
    State(st): State<Shared>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionResource>), ApiError> {
    let Json(req) = body?;
    let trace = st
        .traces
        .get(&req.trace_id)
        .ok_or_else(|| ApiError::NotFound(format!("trace {}", req.trace_id)))?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let entry = SessionEntry {
        trace_id: req.trace_id,
        session: ReplaySession::new(trace.clone(), req.seed),
        last_used: Instant::now(),
    };
    let snap = snapshot(&id, &entry);
    st.sessions
        .lock()
        .expect("session table poisoned")
        .insert(id, Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(snap)))
}

/// Runs `f` on the session under its lock and returns the new snapshot.
fn with_session<F>(st: &AppState, id: &str, f: F) -> Result<Json<SessionResource>, ApiError>
where
    F: FnOnce(&mut ReplaySession) -> Result<(), ApiError>,
{
    let handle = st.session(id)?;
    let mut entry = handle.lock().expect("session poisoned");
    entry.last_used = Instant::now();
    f(&mut entry.session)?;
    Ok(Json(snapshot(id, &entry)))
}

async fn get_session(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionResource>, ApiError> {
    with_session(&st, &id, |_| Ok(()))
}

#[derive(Deserialize)]
struct StepRequest {
    event_id: u64,
}

async fn step_session(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<StepRequest>, JsonRejection>,
) -> Result<Json<SessionResource>, ApiError> {
    // Unknown session is reported before a malformed body.
    st.session(&id)?;
    let Json(req) = body?;
    with_session(&st, &id, |s| {
        s.step(req.event_id).map_err(|e| match e {
            ReplayError::NotInFrontline { event_id, frontline } => {
                ApiError::NotInFrontline { event_id, frontline }
            }
            other => ApiError::BadRequest(other.to_string()),
        })
    })
}

#[derive(Deserialize)]
struct AutoStepRequest {
    #[serde(default = "one")]
    count: usize,
}

fn one() -> usize {
    1
}

async fn auto_step_session(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<SessionResource>, ApiError> {
    st.session(&id)?;
    // The body is optional here; an empty one means a single step.
    let count = if body.iter().all(u8::is_ascii_whitespace) {
        1
    } else {
        serde_json::from_slice::<AutoStepRequest>(&body)
            .map_err(|e| ApiError::BadRequest(e.to_string()))?
            .count
    };
    with_session(&st, &id, |s| {
        s.auto_steps(count);
        Ok(())
    })
}

async fn reset_session(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionResource>, ApiError> {
    with_session(&st, &id, |s| {
        s.reset();
        Ok(())
    })
}

/// The API routes with CORS. `cors_origin` of `None` allows any origin.
pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(origin) => cors.allow_origin(origin),
        None => cors.allow_origin(Any),
    };
    Router::new()
        .route("/traces", get(list_traces))
        .route("/traces/{id}/events", get(trace_events))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/step", post(step_session))
        .route("/sessions/{id}/auto-step", post(auto_step_session))
        .route("/sessions/{id}/reset", post(reset_session))
        .layer(cors)
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, cors_origin: Option<&str>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state, cors_origin)).await
}
