//! HTTP service: scenario management, frontier jobs, threshold filtering and
//! saved solutions.
//!
//! All routes live under `/v1`. Errors are JSON objects
//! `{code, message, detail}`.

pub mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::error::FrontierError;
use crate::frontier::{
    count_strategies, filter_by_thresholds, pareto_frontier_with, target_count_from_exact,
    FrontierOptions, FrontierResult, TargetParams, DEFAULT_FEASIBLE_CAP, DEFAULT_MAX_ITERS,
};
use crate::model::{parse_scenario, ScenarioParseError};
pub use store::{SavedSolution, Store, StoreError, StoredScenario};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub store_path: Option<PathBuf>,
    pub feasible_cap: u64,
    pub workers: usize,
    /// Allowed browser origin; any origin when `None`.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from(([127, 0, 0, 1], 8080)),
            store_path: None,
            feasible_cap: DEFAULT_FEASIBLE_CAP,
            workers: 2,
            cors_origin: None,
        }
    }
}

/// State of the most recent frontier job of a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct JobStatus {
    pub state: JobState,
    pub desired: Option<usize>,
    pub seed: u64,
    /// Strategies evaluated so far.
    pub evaluated: u64,
    pub total: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    scenario_id: String,
    desired: Option<usize>,
    tolerance: Option<usize>,
    seed: u64,
}

struct Job {
    status: JobStatus,
    progress: Arc<AtomicU64>,
}

pub struct AppState {
    store: Store,
    config: ServiceConfig,
    workers: Semaphore,
    cache: Mutex<HashMap<CacheKey, Bytes>>,
    jobs: Mutex<HashMap<String, Job>>,
}

impl AppState {
    pub fn new(store: Store, config: ServiceConfig) -> Arc<Self> {
        let workers = Semaphore::new(config.workers.max(1));
        Arc::new(Self {
            store,
            config,
            workers,
            cache: Mutex::new(HashMap::new()),
            jobs: Mutex::new(HashMap::new()),
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }
}

/// Error body `{code, message, detail}` with its status.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), detail: Value::Null }
    }

    fn detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"code": self.code, "message": self.message, "detail": self.detail});
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::UnknownScenario(_) | StoreError::UnknownSaved(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string())
            }
            StoreError::NoFrontier(_) | StoreError::DanglingSolution { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "dangling_reference", e.to_string())
            }
            StoreError::Io { .. } | StoreError::Corrupt { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store", e.to_string())
            }
        }
    }
}

impl From<FrontierError> for ApiError {
    fn from(e: FrontierError) -> Self {
        match &e {
            FrontierError::TooManyStrategies { count, cap } => {
                ApiError::new(StatusCode::CONFLICT, "feasible_cap_exceeded", e.to_string())
                    .detail(json!({"cap": cap, "count": count.to_string()}))
            }
            FrontierError::Infeasible { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "infeasible", e.to_string())
            }
            _ => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match &state.config.cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(AllowOrigin::exact(v)),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);

    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/scenarios", post(create_scenario).get(list_scenarios))
        .route("/v1/scenarios/{id}", get(get_scenario))
        .route("/v1/scenarios/{id}/frontier", post(compute_frontier).get(latest_frontier))
        .route("/v1/scenarios/{id}/frontier/status", get(frontier_status))
        .route("/v1/scenarios/{id}/frontier/filter", get(filter_frontier))
        .route("/v1/scenarios/{id}/solutions", post(save_solution).get(list_solutions))
        .route("/v1/scenarios/{id}/solutions/{saved_id}", delete(delete_solution))
        .layer(cors)
        .with_state(state)
}

/// Binds and serves until the process is interrupted.
pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let store = match &config.store_path {
        Some(p) => Store::open(p)?,
        None => Store::in_memory(),
    };
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    let app = router(AppState::new(store, config));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

#[derive(Debug, Deserialize)]
struct CreateParams {
    label: Option<String>,
}

async fn create_scenario(
    State(state): State<Arc<AppState>>,
    Query(params): Query<CreateParams>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<StoredScenario>)> {
    let value: Value = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))?;
    let scenario = parse_scenario(value).map_err(|e| match e {
        ScenarioParseError::Shape(err) => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed scenario", err.to_string())
        }
        ScenarioParseError::Invalid(err) => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, err.invariant(), err.to_string())
        }
    })?;
    let (stored, _) = state.store.put_scenario(scenario, params.label.unwrap_or_default()).await?;
    Ok((StatusCode::CREATED, Json(stored)))
}

async fn list_scenarios(State(state): State<Arc<AppState>>) -> Json<Vec<StoredScenario>> {
    Json(state.store.scenarios().await)
}

async fn get_scenario(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<StoredScenario>> {
    state.store.scenario(&id).await.map(Json).ok_or_else(|| ApiError::not_found("scenario"))
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct FrontierParams {
    desired: Option<usize>,
    tolerance: Option<usize>,
    #[serde(default)]
    seed: u64,
    /// Block until the result is ready (default true).
    wait: Option<bool>,
}

fn json_bytes(body: Bytes) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn compute_frontier(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<FrontierParams>,
) -> ApiResult<Response> {
    let stored = state.store.scenario(&id).await.ok_or_else(|| ApiError::not_found("scenario"))?;
    let key = CacheKey {
        scenario_id: id.clone(),
        desired: params.desired,
        tolerance: params.tolerance,
        seed: params.seed,
    };
    let cached = state.cache.lock().unwrap().get(&key).cloned();
    if let Some(body) = cached {
        if let Ok(result) = serde_json::from_slice::<FrontierResult>(&body) {
            state.store.set_latest_frontier(&id, result).await?;
        }
        return Ok(json_bytes(body));
    }

    let count = count_strategies(&stored.scenario);
    let cap = state.config.feasible_cap;
    if count.feasible > u128::from(cap) {
        return Err(FrontierError::TooManyStrategies { count: count.feasible, cap }.into());
    }

    let progress = Arc::new(AtomicU64::new(0));
    let status = JobStatus {
        state: JobState::Queued,
        desired: params.desired,
        seed: params.seed,
        evaluated: 0,
        total: count.feasible as u64,
        error: None,
    };
    state
        .jobs
        .lock()
        .unwrap()
        .insert(id.clone(), Job { status: status.clone(), progress: progress.clone() });

    let task = tokio::spawn(run_job(state.clone(), stored, key, params, progress));
    if params.wait.unwrap_or(true) {
        let body = task
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "job_panicked", e.to_string()))??;
        Ok(json_bytes(body))
    } else {
        let location = format!("/v1/scenarios/{id}/frontier/status");
        Ok((StatusCode::ACCEPTED, [(header::LOCATION, location)], Json(status)).into_response())
    }
}

async fn run_job(
    state: Arc<AppState>,
    stored: StoredScenario,
    key: CacheKey,
    params: FrontierParams,
    progress: Arc<AtomicU64>,
) -> ApiResult<Bytes> {
    let id = stored.scenario_id.clone();
    let set_state = |s: JobState, error: Option<String>| {
        if let Some(job) = state.jobs.lock().unwrap().get_mut(&id) {
            job.status.state = s;
            job.status.error = error;
        }
    };
    let _permit = state.workers.acquire().await.expect("semaphore never closed");
    set_state(JobState::Running, None);

    let options = FrontierOptions {
        cap: Some(state.config.feasible_cap),
        parallel: true,
        progress: Some(progress),
    };
    let computed = tokio::task::spawn_blocking(move || -> Result<FrontierResult, FrontierError> {
        let exact = pareto_frontier_with(&stored.scenario, &options)?;
        match params.desired {
            None => Ok(FrontierResult { seed: params.seed, ..exact }),
            Some(desired) => {
                let mut target = TargetParams::new(desired, params.seed);
                target.max_iters = DEFAULT_MAX_ITERS;
                if let Some(t) = params.tolerance {
                    target.tolerance = t;
                }
                Ok(target_count_from_exact(&exact, target)?.1)
            }
        }
    })
    .await;

    let result = match computed {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => {
            set_state(JobState::Failed, Some(e.to_string()));
            return Err(e.into());
        }
        Err(e) => {
            set_state(JobState::Failed, Some(e.to_string()));
            return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "job_panicked", e.to_string()));
        }
    };
    let body = Bytes::from(serde_json::to_vec(&result).expect("serializable"));
    state.cache.lock().unwrap().insert(key, body.clone());
    state.store.set_latest_frontier(&id, result).await?;
    set_state(JobState::Done, None);
    Ok(body)
}

async fn frontier_status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<JobStatus>> {
    let jobs = state.jobs.lock().unwrap();
    let job = jobs.get(&id).ok_or_else(|| ApiError::not_found("frontier job"))?;
    let mut status = job.status.clone();
    status.evaluated = job.progress.load(Ordering::Relaxed);
    Ok(Json(status))
}

async fn latest_frontier(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<FrontierResult>> {
    if state.store.scenario(&id).await.is_none() {
        return Err(ApiError::not_found("scenario"));
    }
    state.store.latest_frontier(&id).await.map(Json).ok_or_else(compute_first)
}

fn compute_first() -> ApiError {
    ApiError::new(StatusCode::CONFLICT, "compute first", "no frontier computed for this scenario; compute first")
}

#[derive(Debug, Serialize)]
struct FilterResponse {
    count: usize,
    #[serde(flatten)]
    frontier: FrontierResult,
}

/// Query: `min_health` plus `max_q_<i>` for category index `i` (0-based) or
/// `max_q_<category id>`.
async fn filter_frontier(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let stored = state.store.scenario(&id).await.ok_or_else(|| ApiError::not_found("scenario"))?;
    let frontier = state.store.latest_frontier(&id).await.ok_or_else(compute_first)?;
    let bad = |name: &str, v: &str| {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_threshold", format!("{name}={v} is not a number"))
    };
    let mut min_health = f64::NEG_INFINITY;
    let mut max_q = vec![f64::INFINITY; stored.scenario.k()];
    for (name, v) in &params {
        let x: f64 = v.parse().map_err(|_| bad(name, v))?;
        if name == "min_health" {
            min_health = x;
        } else if let Some(cat) = name.strip_prefix("max_q_") {
            let i = cat
                .parse::<usize>()
                .ok()
                .filter(|&i| i < max_q.len())
                .or_else(|| stored.scenario.index_of(cat))
                .ok_or_else(|| {
                    ApiError::new(StatusCode::BAD_REQUEST, "unknown_category", format!("no category {cat}"))
                })?;
            max_q[i] = x;
        } else {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "unknown_parameter", format!("unknown parameter {name}")));
        }
    }
    let filtered = filter_by_thresholds(&frontier, min_health, &max_q);
    Ok(Json(FilterResponse { count: filtered.len(), frontier: filtered }).into_response())
}

#[derive(Debug, Deserialize)]
struct SaveRequest {
    solution_id: u64,
    #[serde(default)]
    note: String,
}

async fn save_solution(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<SavedSolution>)> {
    let req: SaveRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))?;
    if state.store.scenario(&id).await.is_none() {
        return Err(ApiError::not_found("scenario"));
    }
    let saved = state.store.save_solution(&id, req.solution_id, req.note).await?;
    Ok((StatusCode::CREATED, Json(saved)))
}

async fn list_solutions(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Vec<SavedSolution>>> {
    if state.store.scenario(&id).await.is_none() {
        return Err(ApiError::not_found("scenario"));
    }
    Ok(Json(state.store.solutions(&id).await))
}

async fn delete_solution(
    State(state): State<Arc<AppState>>,
    Path((id, saved_id)): Path<(String, u64)>,
) -> ApiResult<StatusCode> {
    state.store.delete_solution(&id, saved_id).await?;
    Ok(StatusCode::NO_CONTENT)
}
