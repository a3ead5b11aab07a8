//! HTTP API over [`InteractiveSession`]s.
//!
//! Sessions live in memory. Mutating requests on one session are
//! serialized by a per-session lock, and reads take the same lock, so a
//! read never observes a half-finished cycle. Every accepted request that
//! changes a session can optionally write the session's record to a
//! directory.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sharetrail_core::engine::{CycleRecord, DiscoveredWebsite, EngineError, Inputs, SessionConfig};
use sharetrail_core::ranking::{Candidate, CriterionKind};
use sharetrail_core::{Corpus, Denylist, ExecutionRecord, InteractiveSession, Label, LabelSet, SessionStatus};
use tokio::sync::Mutex;

/// Context posts shown per candidate URL.
pub const SAMPLE_POSTS: usize = 3;

/// A loaded corpus with its labels and denylist.
#[derive(Debug)]
pub struct Dataset {
    pub corpus: Corpus,
    pub labels: LabelSet,
    pub denylist: Denylist,
}

impl Dataset {
    pub fn inputs(&self) -> Inputs<'_> {
        Inputs {
            corpus: &self.corpus,
            labels: &self.labels,
            denylist: &self.denylist,
        }
    }
}

struct Slot {
    dataset: Arc<Dataset>,
    session: Mutex<InteractiveSession>,
}

pub struct AppState {
    datasets: BTreeMap<String, Arc<Dataset>>,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    next_id: AtomicU64,
    records_dir: Option<PathBuf>,
    default_top_k: usize,
}

impl AppState {
    pub fn new(datasets: impl IntoIterator<Item = (String, Dataset)>) -> Self {
        AppState {
            datasets: datasets.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            records_dir: None,
            default_top_k: sharetrail_core::engine::DEFAULT_TOP_K,
        }
    }

    /// Candidate-list length for sessions that do not ask for one.
    pub fn with_default_top_k(mut self, top_k: usize) -> Self {
        self.default_top_k = top_k.max(1);
        self
    }

    /// Writes each session's record to `<dir>/<session_id>.json` after
    /// every change.
    pub fn with_records_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.records_dir = Some(dir.into());
        self
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session {id:?}")))
    }

    fn write_through(&self, id: &str, record: &ExecutionRecord) {
        if let Some(dir) = &self.records_dir {
            if let Err(e) = write_atomic(dir, &format!("{id}.json"), record.to_json().as_bytes()) {
                tracing::error!(session = id, error = %e, "record write-through failed");
            }
        }
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

/// Error body: `{code, message}`, plus the session's cycle when known.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<u32>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                cycle: None,
            },
        }
    }

    fn at(mut self, cycle: u32) -> Self {
        self.body.cycle = Some(cycle);
        self
    }

    fn bad_body(rejection: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", rejection.body_text())
    }

    fn finished() -> Self {
        ApiError::new(StatusCode::CONFLICT, "session_finished", "session is finished")
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let (status, code) = match &e {
            EngineError::InvalidSeed(_) => (StatusCode::BAD_REQUEST, "invalid_url"),
            EngineError::UnresolvableSeed(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unresolvable_seed"),
            EngineError::NotACandidate(_) => (StatusCode::UNPROCESSABLE_ENTITY, "not_a_candidate"),
            EngineError::Finished => (StatusCode::CONFLICT, "session_finished"),
            EngineError::ZeroCycles => (StatusCode::BAD_REQUEST, "bad_request"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    /// Dataset id; may be omitted when the server holds exactly one.
    #[serde(default)]
    pub corpus: Option<String>,
    pub initial_seed: String,
    pub criterion: CriterionKind,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub max_cycles: Option<u32>,
    #[serde(default)]
    pub rng_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub corpus: String,
    pub criterion: CriterionKind,
    pub status: SessionStatus,
    pub current_cycle: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlView {
    pub url: String,
    pub distinct_sharers: u32,
    pub total_shares: u32,
    /// Posts by identified users that contain the URL, in corpus order.
    pub sample_post_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateView {
    pub rank: usize,
    pub website: String,
    pub label: Label,
    pub h_index: u32,
    pub most_pop_share_count: u32,
    pub total_shares: u64,
    pub total_distinct_sharers: u64,
    /// The website has h = 0 and only its most-shared URL is offered.
    pub fallback: bool,
    pub urls: Vec<UrlView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatesResponse {
    pub session_id: String,
    pub cycle: u32,
    pub status: SessionStatus,
    pub candidates: Vec<CandidateView>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRequest {
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedResponse {
    pub session_id: String,
    /// The cycle this choice closed.
    pub cycle: u32,
    pub cycle_record: CycleRecord,
    pub status: SessionStatus,
    pub current_cycle: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryResponse {
    pub session_id: String,
    /// Number of completed cycles.
    pub cycle: u32,
    pub status: SessionStatus,
    pub record: ExecutionRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportResponse {
    pub session_id: String,
    pub cycle: u32,
    pub status: SessionStatus,
    pub discovered_websites: Vec<DiscoveredWebsite>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/candidates", get(get_candidates))
        .route("/sessions/{id}/seed", post(post_seed))
        .route("/sessions/{id}/history", get(get_history))
        .route("/sessions/{id}/export", get(get_export))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

fn completed(session: &InteractiveSession) -> u32 {
    session.record().cycles.len() as u32
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionDescriptor>), ApiError> {
    let Json(req) = body.map_err(ApiError::bad_body)?;
    let corpus_id = match req.corpus {
        Some(id) => id,
        None if state.datasets.len() == 1 => state.datasets.keys().next().cloned().expect("one dataset"),
        None => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_request",
                "corpus is required when the server holds several",
            ))
        }
    };
    let dataset = state
        .datasets
        .get(&corpus_id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "corpus_not_found", format!("no corpus {corpus_id:?}")))?;
    let mut config = SessionConfig::new(req.initial_seed, req.criterion);
    config.top_k = state.default_top_k;
    if let Some(k) = req.top_k {
        if k == 0 {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "top_k must be at least 1"));
        }
        config.top_k = k;
    }
    if let Some(n) = req.max_cycles {
        config.max_cycles = n;
    }
    if let Some(s) = req.rng_seed {
        config.rng_seed = s;
    }
    let ds = dataset.clone();
    let session = tokio::task::spawn_blocking(move || InteractiveSession::start(ds.inputs(), &config))
        .await
        .expect("session start panicked")?;

    let id = format!("s{:06}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let descriptor = SessionDescriptor {
        session_id: id.clone(),
        corpus: corpus_id,
        criterion: req.criterion,
        status: session.status(),
        current_cycle: session.current_cycle(),
    };
    state.write_through(&id, session.record());
    let slot = Arc::new(Slot {
        dataset,
        session: Mutex::new(session),
    });
    state.sessions.write().expect("session map poisoned").insert(id, slot);
    Ok((StatusCode::CREATED, Json(descriptor)))
}

fn candidate_view(dataset: &Dataset, session: &InteractiveSession, c: &Candidate) -> CandidateView {
    let corpus = &dataset.corpus;
    let urls = c
        .urls
        .iter()
        .map(|u| {
            let sample_post_ids = u
                .url_ref
                .map(|r| {
                    corpus
                        .posts_with_url(r)
                        .iter()
                        .filter(|&&p| session.is_identified(corpus.post_author(p)))
                        .take(SAMPLE_POSTS)
                        .map(|&p| corpus.posts()[p as usize].post_id.clone())
                        .collect()
                })
                .unwrap_or_default();
            UrlView {
                url: u.url.to_string(),
                distinct_sharers: u.distinct_sharers,
                total_shares: u.total_shares,
                sample_post_ids,
            }
        })
        .collect();
    CandidateView {
        rank: c.rank,
        website: c.score.website.clone(),
        label: dataset.labels.lookup(&c.score.website),
        h_index: c.score.h_index,
        most_pop_share_count: c.score.most_pop_share_count,
        total_shares: c.score.total_shares,
        total_distinct_sharers: c.score.total_distinct_sharers,
        fallback: c.fallback,
        urls,
    }
}

async fn get_candidates(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<CandidatesResponse>, ApiError> {
    let slot = state.slot(&id)?;
    let session = slot.session.lock().await;
    let list = session
        .candidates()
        .ok_or_else(|| ApiError::finished().at(completed(&session)))?;
    let candidates = list.iter().map(|c| candidate_view(&slot.dataset, &session, c)).collect();
    Ok(Json(CandidatesResponse {
        session_id: id,
        cycle: session.current_cycle(),
        status: session.status(),
        candidates,
    }))
}

async fn post_seed(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<SeedRequest>, JsonRejection>,
) -> Result<Json<SeedResponse>, ApiError> {
    let slot = state.slot(&id)?;
    let Json(req) = body.map_err(ApiError::bad_body)?;
    let st = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut session = slot.session.blocking_lock();
        let cycle = session.current_cycle();
        let closed = session
            .choose_seed(slot.dataset.inputs(), &req.url)
            .map_err(|e| ApiError::from(e).at(cycle))?
            .clone();
        st.write_through(&id, session.record());
        Ok(Json(SeedResponse {
            session_id: id,
            cycle: closed.cycle_no,
            cycle_record: closed,
            status: session.status(),
            current_cycle: session.current_cycle(),
        }))
    })
    .await
    .expect("seed choice panicked")
}

async fn get_history(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<HistoryResponse>, ApiError> {
    let slot = state.slot(&id)?;
    let session = slot.session.lock().await;
    Ok(Json(HistoryResponse {
        session_id: id,
        cycle: completed(&session),
        status: session.status(),
        record: session.record().clone(),
    }))
}

async fn get_export(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<ExportResponse>, ApiError> {
    let slot = state.slot(&id)?;
    let session = slot.session.lock().await;
    Ok(Json(ExportResponse {
        session_id: id,
        cycle: completed(&session),
        status: session.status(),
        discovered_websites: session.record().discovered_websites.clone(),
    }))
}
