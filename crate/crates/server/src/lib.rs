//! HTTP/JSON front end for editing sessions.
//!
//! Every session response carries the document `version` it was computed
//! against. Errors are `{"error": "..."}` bodies with 404 for unknown
//! sessions or patterns, 422 for requests the engine rejects, and 400 for
//! bodies or queries that do not parse.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use pattern_forge_core::{
    Condition, PatternFile, PatternId, PositionError, Session, StoreError, TargetKind,
    VoteDirection,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new() -> Arc<AppState> {
        Arc::new(AppState::default())
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    version: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            version: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }

    fn at(mut self, version: u64) -> Self {
        self.version = Some(version);
        self
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::Validation(_) | StoreError::Import(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<PositionError> for ApiError {
    fn from(e: PositionError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(v) = self.version {
            body["version"] = v.into();
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

fn ok(status: StatusCode, version: u64, mut body: Value) -> ApiResult {
    body["version"] = version.into();
    Ok((status, Json(body)).into_response())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpenSession {
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Position {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TextRange {
    pub start: Position,
    pub end: Position,
}

/// A full replacement when `range` is absent, otherwise a range edit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditText {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<TextRange>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AddPattern {
    pub kind: TargetKind,
    pub conditions: Vec<Condition>,
    pub target: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Vote {
    pub direction: VoteDirection,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(open_session))
        .route("/sessions/{id}/text", put(edit_text))
        .route("/sessions/{id}/completions", get(completions))
        .route("/sessions/{id}/patterns", get(list_patterns).post(add_pattern))
        .route("/sessions/{id}/patterns/export", get(export_patterns))
        .route("/sessions/{id}/patterns/import", post(import_patterns))
        .route("/sessions/{id}/patterns/{pid}/vote", post(vote))
        .route("/sessions/{id}/patterns/{pid}/inspect", get(inspect))
        .with_state(state)
}

async fn open_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: OpenSession = if body.is_empty() {
        OpenSession { text: String::new() }
    } else {
        parse_body(&body)?
    };
    let session = Session::new(req.text);
    let version = session.version();
    let id = uuid::Uuid::new_v4().to_string();
    state
        .sessions
        .write()
        .expect("session map lock")
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    ok(StatusCode::CREATED, version, json!({ "session_id": id }))
}

async fn edit_text(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let session = state.session(&id)?;
    let req: EditText = parse_body(&body)?;
    let mut s = session.lock().expect("session lock");
    let version = match req.range {
        None => s.set_text(req.text),
        Some(r) => s
            .replace_range((r.start.line, r.start.col), (r.end.line, r.end.col), &req.text)
            .map_err(|e| ApiError::from(e).at(s.version()))?,
    };
    ok(StatusCode::OK, version, json!({}))
}

fn query_usize(query: &HashMap<String, String>, key: &str) -> Result<usize, ApiError> {
    let raw = query
        .get(key)
        .ok_or_else(|| ApiError::bad_request(format!("missing query parameter `{key}`")))?;
    raw.parse()
        .map_err(|_| ApiError::bad_request(format!("query parameter `{key}` must be a positive integer")))
}

async fn completions(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult {
    let session = state.session(&id)?;
    let (line, col) = (query_usize(&query, "line")?, query_usize(&query, "col")?);
    let mut s = session.lock().expect("session lock");
    let list = s
        .completions(line, col)
        .map_err(|e| ApiError::from(e).at(s.version()))?;
    ok(StatusCode::OK, s.version(), json!({ "completions": list }))
}

async fn list_patterns(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult {
    let session = state.session(&id)?;
    let kind: TargetKind = query
        .get("kind")
        .ok_or_else(|| ApiError::bad_request("missing query parameter `kind`"))?
        .parse()
        .map_err(|e: String| ApiError::bad_request(e))?;
    let mut s = session.lock().expect("session lock");
    let listing = s.patterns(kind);
    ok(StatusCode::OK, s.version(), json!({ "patterns": listing }))
}

async fn add_pattern(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let session = state.session(&id)?;
    let req: AddPattern = parse_body(&body)?;
    let mut s = session.lock().expect("session lock");
    let pattern = s
        .add_pattern(req.kind, req.conditions, &req.target)
        .map_err(|e| ApiError::from(e).at(s.version()))?;
    ok(StatusCode::CREATED, s.version(), json!({ "pattern": pattern }))
}

async fn vote(
    State(state): State<Arc<AppState>>,
    Path((id, pid)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult {
    let session = state.session(&id)?;
    let req: Vote = parse_body(&body)?;
    let mut s = session.lock().expect("session lock");
    let pid = PatternId::from(pid.as_str());
    let state = s
        .vote(&pid, req.direction)
        .map_err(|e| ApiError::from(e).at(s.version()))?;
    let pattern = s.store().get(&pid).cloned();
    ok(StatusCode::OK, s.version(), json!({ "state": state, "pattern": pattern }))
}

async fn inspect(State(state): State<Arc<AppState>>, Path((id, pid)): Path<(String, String)>) -> ApiResult {
    let session = state.session(&id)?;
    let s = session.lock().expect("session lock");
    let result = s
        .inspect(&PatternId::from(pid.as_str()))
        .map_err(|e| ApiError::from(e).at(s.version()))?;
    ok(StatusCode::OK, s.version(), json!({ "inspection": result }))
}

async fn export_patterns(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let session = state.session(&id)?;
    let s = session.lock().expect("session lock");
    ok(StatusCode::OK, s.version(), json!({ "file": s.export() }))
}

async fn import_patterns(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let session = state.session(&id)?;
    let file: PatternFile = parse_body(&body)?;
    let mut s = session.lock().expect("session lock");
    s.import(&file).map_err(|e| ApiError::from(e).at(s.version()))?;
    let imported = file.prioritized.len() + file.blacklisted.len();
    ok(StatusCode::OK, s.version(), json!({ "imported": imported }))
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new())).await
}
