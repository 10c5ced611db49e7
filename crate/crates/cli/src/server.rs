//! HTTP API: public scoring runs plus token-guarded model rebuilding.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/api/runs` | multipart `file` (batch CSV), optional `model_version` → 202 `{run_id}` |
//! | GET | `/api/runs/{id}` | `{run_id, status, model_version, error?}` |
//! | GET | `/api/runs/{id}/results.csv` | result CSV, 404 until done |
//! | GET | `/api/runs/{id}/report.json` | report, 404 until done |
//! | GET | `/api/runs/{id}/charts/{bar,pie,bubble}.svg` | chart, 404 until done |
//! | GET | `/api/models` | published versions with per-concept pass flags |
//! | POST | `/api/admin/training-sets` | multipart `file` (training CSV) plus options → 202 `{build_id}` |
//! | GET | `/api/admin/builds/{id}` | build status and summary |

use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use evoscore_core::corpus::{parse_response_batch, parse_training_corpus, ConceptId};
use evoscore_core::service::{
    build_model_set, execute_run, write_atomic, ConceptConfigs, ModelSet, Registry, RunArtifacts, RunStatus,
    ScoringRun, ServiceError,
};
use evoscore_core::smo::SmoParams;
use serde::Serialize;
use serde_json::json;
use tokio::sync::Semaphore;

const BODY_LIMIT: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub registry: PathBuf,
    pub data_dir: PathBuf,
    pub workers: usize,
    pub admin_token: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct RunView {
    run_id: String,
    status: RunStatus,
    model_version: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum BuildStatus {
    Pending,
    Training,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
struct ConceptFlag {
    concept: ConceptId,
    passed: bool,
    kappa: f64,
    agreement_pct: f64,
}

#[derive(Debug, Clone, Serialize)]
struct BuildView {
    build_id: String,
    status: BuildStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    version: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    concepts: Option<Vec<ConceptFlag>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

struct AppState {
    registry: Registry,
    data_dir: PathBuf,
    admin_token: Option<String>,
    scoring_slots: Semaphore,
    build_slots: Semaphore,
    runs: RwLock<HashMap<String, RunView>>,
    builds: RwLock<HashMap<String, BuildView>>,
    sets: Mutex<HashMap<u64, Arc<ModelSet>>>,
}

impl AppState {
    fn run_dir(&self, id: &str) -> PathBuf {
        self.data_dir.join("runs").join(id)
    }

    fn model_set(&self, version: u64) -> Result<Arc<ModelSet>, ServiceError> {
        if let Some(set) = self.sets.lock().unwrap().get(&version) {
            return Ok(set.clone());
        }
        let set = Arc::new(self.registry.load(version)?);
        self.sets.lock().unwrap().insert(version, set.clone());
        Ok(set)
    }

    fn concept_flags(set: &ModelSet) -> Vec<ConceptFlag> {
        set.bundles()
            .iter()
            .map(|b| ConceptFlag {
                concept: b.concept,
                passed: b.summary.passed,
                kappa: b.summary.pooled.kappa,
                agreement_pct: b.summary.pooled.agreement_pct,
            })
            .collect()
    }
}

type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl ToString) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message.to_string())
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::NoActiveVersion => StatusCode::CONFLICT,
            ServiceError::UnknownVersion(_) => StatusCode::NOT_FOUND,
            ServiceError::Corpus(_) | ServiceError::Config(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(config: ServerConfig) -> Result<Router, ServiceError> {
    let registry = Registry::open(&config.registry)?;
    std::fs::create_dir_all(config.data_dir.join("runs"))
        .map_err(|source| ServiceError::Io { path: config.data_dir.clone(), source })?;
    let state = Arc::new(AppState {
        registry,
        data_dir: config.data_dir,
        admin_token: config.admin_token.filter(|t| !t.is_empty()),
        scoring_slots: Semaphore::new(config.workers.max(1)),
        build_slots: Semaphore::new(1),
        runs: RwLock::default(),
        builds: RwLock::default(),
        sets: Mutex::default(),
    });
    Ok(Router::new()
        .route("/api/runs", post(create_run))
        .route("/api/runs/{id}", get(run_status))
        .route("/api/runs/{id}/results.csv", get(run_results))
        .route("/api/runs/{id}/report.json", get(run_report))
        .route("/api/runs/{id}/charts/{chart}", get(run_chart))
        .route("/api/models", get(list_models))
        .route("/api/admin/training-sets", post(create_build))
        .route("/api/admin/builds/{id}", get(build_status))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state))
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServerConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let app = router(config)?;
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

pub async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

struct Upload {
    file: Option<Vec<u8>>,
    fields: HashMap<String, String>,
}

async fn read_upload(mut multipart: Multipart) -> ApiResult<Upload> {
    let mut upload = Upload { file: None, fields: HashMap::new() };
    while let Some(field) = multipart.next_field().await.map_err(ApiError::bad_request)? {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field.bytes().await.map_err(ApiError::bad_request)?;
        if name == "file" {
            upload.file = Some(bytes.to_vec());
        } else {
            let text = String::from_utf8(bytes.to_vec()).map_err(|_| ApiError::bad_request(format!("{name}: not UTF-8")))?;
            upload.fields.insert(name, text.trim().to_string());
        }
    }
    Ok(upload)
}

fn field<T: std::str::FromStr>(upload: &Upload, name: &str) -> ApiResult<Option<T>> {
    match upload.fields.get(name).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| ApiError::bad_request(format!("{name}: invalid value {v:?}"))),
    }
}

async fn create_run(State(state): State<Shared>, multipart: Multipart) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let upload = read_upload(multipart).await?;
    let file = upload.file.as_deref().ok_or_else(|| ApiError::bad_request("missing file field"))?;
    let batch = parse_response_batch(file).map_err(ApiError::bad_request)?;
    let version = match field::<u64>(&upload, "model_version")? {
        Some(v) => v,
        None => state.registry.active_version()?.ok_or(ServiceError::NoActiveVersion)?,
    };
    let set = {
        let state = state.clone();
        tokio::task::spawn_blocking(move || state.model_set(version))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??
    };

    let run = ScoringRun::new(batch, version);
    let run_id = run.run_id.clone();
    state.runs.write().unwrap().insert(
        run_id.clone(),
        RunView { run_id: run_id.clone(), status: run.status, model_version: version, error: None },
    );
    tokio::spawn(process_run(state, run, set));
    Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": run_id }))))
}

async fn process_run(state: Shared, mut run: ScoringRun, set: Arc<ModelSet>) {
    let Ok(_permit) = state.scoring_slots.acquire().await else { return };
    let worker_state = state.clone();
    let id = run.run_id.clone();
    let joined = tokio::task::spawn_blocking(move || {
        let dir = worker_state.run_dir(&run.run_id);
        let record = |r: &ScoringRun| {
            let view = RunView {
                run_id: r.run_id.clone(),
                status: r.status,
                model_version: r.model_version,
                error: r.error.clone(),
            };
            if let Ok(bytes) = serde_json::to_vec_pretty(&view) {
                let _ = write_atomic(&dir.join("run.json"), &bytes);
            }
            worker_state.runs.write().unwrap().insert(r.run_id.clone(), view);
        };
        if let Err(e) = execute_run(&mut run, &set, &dir, record) {
            tracing::warn!(run_id = %run.run_id, error = %e, "scoring run failed");
        }
    })
    .await;
    if let Err(e) = joined {
        let mut runs = state.runs.write().unwrap();
        if let Some(view) = runs.get_mut(&id) {
            view.status = RunStatus::Failed;
            view.error = Some(format!("worker crashed: {e}"));
        }
    }
}

fn finished_run(state: &AppState, id: &str) -> ApiResult<RunArtifacts> {
    let runs = state.runs.read().unwrap();
    let view = runs.get(id).ok_or_else(|| ApiError::not_found("run"))?;
    if view.status != RunStatus::Done {
        return Err(ApiError::new(StatusCode::NOT_FOUND, format!("run {id} is {}", view.status)));
    }
    Ok(RunArtifacts::in_dir(&state.run_dir(id)))
}

async fn send_file(path: PathBuf, content_type: &'static str) -> ApiResult<Response> {
    let bytes = tokio::fs::read(&path).await.map_err(|_| ApiError::not_found("artifact"))?;
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

async fn run_status(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<RunView>> {
    let runs = state.runs.read().unwrap();
    runs.get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found("run"))
}

async fn run_results(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let artifacts = finished_run(&state, &id)?;
    send_file(artifacts.results_csv, "text/csv; charset=utf-8").await
}

async fn run_report(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let artifacts = finished_run(&state, &id)?;
    send_file(artifacts.report_json, "application/json").await
}

async fn run_chart(State(state): State<Shared>, Path((id, chart)): Path<(String, String)>) -> ApiResult<Response> {
    let kind = chart.strip_suffix(".svg").ok_or_else(|| ApiError::not_found("chart"))?;
    let artifacts = finished_run(&state, &id)?;
    let path = artifacts.chart(kind).ok_or_else(|| ApiError::not_found("chart"))?.to_path_buf();
    send_file(path, "image/svg+xml").await
}

async fn list_models(State(state): State<Shared>) -> ApiResult<Json<serde_json::Value>> {
    let listing = tokio::task::spawn_blocking(move || -> Result<serde_json::Value, ServiceError> {
        let active = state.registry.active_version()?;
        let mut versions = Vec::new();
        for v in state.registry.versions()? {
            let set = state.model_set(v)?;
            versions.push(json!({
                "version": v,
                "created_at": set.created_at(),
                "corpus_fingerprint": set.provenance().corpus_fingerprint,
                "concepts": AppState::concept_flags(&set),
            }));
        }
        Ok(json!({ "active": active, "versions": versions }))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(listing))
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

fn authorize(state: &AppState, headers: &HeaderMap) -> ApiResult<()> {
    let unauthorized = || ApiError::new(StatusCode::UNAUTHORIZED, "admin token required");
    let expected = state.admin_token.as_deref().ok_or_else(unauthorized)?;
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(unauthorized)?;
    if constant_time_eq(given.trim().as_bytes(), expected.as_bytes()) {
        Ok(())
    } else {
        Err(unauthorized())
    }
}

async fn create_build(
    State(state): State<Shared>,
    headers: HeaderMap,
    multipart: Multipart,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let auth = authorize(&state, &headers);
    let upload = read_upload(multipart).await;
    auth?;
    let upload = upload?;
    let file = upload.file.as_deref().ok_or_else(|| ApiError::bad_request("missing file field"))?;
    let corpus = parse_training_corpus(file).map_err(ApiError::bad_request)?;
    let seed = field::<u64>(&upload, "seed")?.unwrap_or(1);
    let folds = field::<usize>(&upload, "folds")?.unwrap_or(10);
    let params = SmoParams {
        c: field(&upload, "c")?.unwrap_or(1.0),
        kkt_tolerance: field(&upload, "tolerance")?.unwrap_or(1e-3),
        ..SmoParams::default()
    };
    params.validate().map_err(ApiError::bad_request)?;
    let configs = match upload.fields.get("config") {
        Some(text) => ConceptConfigs::default().with_overrides(text)?,
        None => ConceptConfigs::default(),
    };

    let build_id = uuid::Uuid::new_v4().simple().to_string();
    let view = BuildView { build_id: build_id.clone(), status: BuildStatus::Pending, version: None, concepts: None, error: None };
    state.builds.write().unwrap().insert(build_id.clone(), view);
    let id = build_id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = state.build_slots.acquire().await else { return };
        let set_status = |status: BuildStatus, f: &dyn Fn(&mut BuildView)| {
            if let Some(v) = state.builds.write().unwrap().get_mut(&id) {
                v.status = status;
                f(v);
            }
        };
        set_status(BuildStatus::Training, &|_| {});
        let worker = state.clone();
        let outcome = tokio::task::spawn_blocking(move || -> Result<(u64, Vec<ConceptFlag>), ServiceError> {
            let (set, report) = build_model_set(&corpus, &configs, &params, folds, seed)?;
            let version = worker.registry.publish(&set, Some(&report))?;
            Ok((version, AppState::concept_flags(&set)))
        })
        .await;
        match outcome {
            Ok(Ok((version, flags))) => set_status(BuildStatus::Done, &|v| {
                v.version = Some(version);
                v.concepts = Some(flags.clone());
            }),
            Ok(Err(e)) => set_status(BuildStatus::Failed, &|v| v.error = Some(e.to_string())),
            Err(e) => set_status(BuildStatus::Failed, &|v| v.error = Some(format!("worker crashed: {e}"))),
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "build_id": build_id }))))
}

async fn build_status(
    State(state): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<Json<BuildView>> {
    authorize(&state, &headers)?;
    let builds = state.builds.read().unwrap();
    builds.get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found("build"))
}
