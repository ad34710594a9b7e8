//! Local HTTP API over the preflearn experiment pipeline.
//!
//! Datasets are uploaded once and referenced by content hash; experiments
//! run as jobs on a bounded worker pool and stream progress as
//! newline-delimited JSON.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/health` | liveness |
//! | GET | `/params` | parameter metadata (defaults, ranges, help) |
//! | POST | `/datasets` | multipart upload: `file`, or `objects` + `orders`; optional `options` (JSON) |
//! | GET | `/datasets/{id}` | schema and counts |
//! | GET | `/datasets/{id}/stats` | feature statistics |
//! | POST | `/experiments` | experiment config; `dataset_id` may replace `dataset` |
//! | GET | `/experiments` | all jobs |
//! | GET | `/experiments/{id}` | state, percent, recent log |
//! | GET | `/experiments/{id}/report` | report JSON once finished |
//! | GET | `/experiments/{id}/model` | model file once done |
//! | POST | `/experiments/{id}/cancel` | cancel; 409 when already finished |
//! | GET | `/experiments/{id}/events` | NDJSON progress stream (`?since=N`, `?follow=false`) |

mod datasets;
mod error;
mod jobs;

use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::stream;
use preflearn::dataset::ParserOptions;
use preflearn::experiment::ExperimentConfig;
use serde::Deserialize;
use serde_json::{json, Value};

pub use datasets::{DatasetSummary, Upload};
pub use error::ApiError;
pub use jobs::{JobState, JobView};

use datasets::DatasetStore;
use jobs::{CancelOutcome, Job, JobQueue};

const PARAMS: &str = include_str!("params.json");

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Where uploaded datasets are stored.
    pub data_dir: PathBuf,
    /// Experiments allowed to run at once.
    pub workers: usize,
    /// Largest accepted request body, in bytes.
    pub max_upload: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: std::env::temp_dir().join("preflearn-service"),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_upload: 256 << 20,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    datasets: Arc<DatasetStore>,
    jobs: Arc<JobQueue>,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> std::io::Result<Self> {
        std::fs::create_dir_all(&config.data_dir)?;
        Ok(AppState {
            datasets: Arc::new(DatasetStore::new(config.data_dir.clone())),
            jobs: Arc::new(JobQueue::new(config.workers)),
        })
    }
}

pub fn router(state: AppState, max_upload: usize) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/params", get(params))
        .route("/datasets", post(upload_dataset))
        .route("/datasets/{id}", get(dataset_summary))
        .route("/datasets/{id}/stats", get(dataset_stats))
        .route("/experiments", post(create_experiment).get(list_experiments))
        .route("/experiments/{id}", get(experiment_view))
        .route("/experiments/{id}/report", get(experiment_report))
        .route("/experiments/{id}/model", get(experiment_model))
        .route("/experiments/{id}/cancel", post(cancel_experiment))
        .route("/experiments/{id}/events", get(experiment_events))
        .layer(DefaultBodyLimit::max(max_upload))
        .layer(tower_http::cors::CorsLayer::permissive())
        .with_state(state)
}

/// Bind `addr` and serve until the process ends.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::new(&config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, config.max_upload)).await
}

async fn params() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], PARAMS).into_response()
}

async fn upload_dataset(State(state): State<AppState>, mut multipart: Multipart) -> Result<Json<DatasetSummary>, ApiError> {
    let (mut file, mut objects, mut orders, mut options) = (None, None, None, None);
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::BadRequest(e.to_string()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let bytes: Bytes = field.bytes().await.map_err(|e| ApiError::BadRequest(e.to_string()))?;
        match name.as_str() {
            "file" => file = Some(bytes.to_vec()),
            "objects" => objects = Some(bytes.to_vec()),
            "orders" => orders = Some(bytes.to_vec()),
            "options" => options = Some(bytes),
            other => return Err(ApiError::BadRequest(format!("unexpected multipart field '{other}'"))),
        }
    }
    let options: ParserOptions = match options {
        Some(b) if !b.is_empty() => serde_json::from_slice(&b).map_err(|e| ApiError::Field {
            path: "options".into(),
            message: e.to_string(),
        })?,
        _ => ParserOptions::default(),
    };
    let upload = match (file, objects, orders) {
        (Some(f), None, None) => Upload::Single(f),
        (None, Some(objects), Some(orders)) => Upload::Dual { objects, orders },
        _ => {
            return Err(ApiError::BadRequest(
                "send either 'file', or both 'objects' and 'orders'".into(),
            ))
        }
    };
    let store = state.datasets.clone();
    let summary = tokio::task::spawn_blocking(move || store.insert(upload, options))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(summary))
}

async fn dataset_summary(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<DatasetSummary>, ApiError> {
    state
        .datasets
        .get(&id)
        .map(|d| Json(d.summary))
        .ok_or_else(|| ApiError::NotFound(format!("dataset '{id}'")))
}

async fn dataset_stats(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let d = state
        .datasets
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("dataset '{id}'")))?;
    Ok(Json(d.summary.stats).into_response())
}

async fn create_experiment(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let mut value: Value = serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| ApiError::BadRequest("the config must be a JSON object".into()))?;
    if let Some(id) = obj.remove("dataset_id") {
        let id = id
            .as_str()
            .ok_or_else(|| ApiError::Field {
                path: "dataset_id".into(),
                message: "expected a string".into(),
            })?
            .to_string();
        let d = state
            .datasets
            .get(&id)
            .ok_or_else(|| ApiError::NotFound(format!("dataset '{id}'")))?;
        obj.insert("dataset".into(), serde_json::to_value(&d.source).expect("source serializes"));
    } else if matches!(obj.get("dataset").and_then(|d| d.get("type")), Some(Value::String(t)) if t != "synthetic") {
        return Err(ApiError::Field {
            path: "dataset".into(),
            message: "file sources must be uploaded first and referenced by dataset_id".into(),
        });
    }
    // The server never writes outside its own state.
    obj.remove("output");
    let config = ExperimentConfig::from_json(&serde_json::to_vec(&value).expect("value serializes"))?;
    let job_id = state.jobs.submit(config);
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))).into_response())
}

fn job(state: &AppState, id: &str) -> Result<Arc<Job>, ApiError> {
    state
        .jobs
        .get(id)
        .ok_or_else(|| ApiError::NotFound(format!("experiment '{id}'")))
}

async fn list_experiments(State(state): State<AppState>) -> Json<Vec<JobView>> {
    Json(state.jobs.list())
}

async fn experiment_view(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<JobView>, ApiError> {
    Ok(Json(job(&state, &id)?.view()))
}

async fn experiment_report(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = job(&state, &id)?;
    let r = job.lock();
    match &r.report {
        Some(report) => Ok(([(header::CONTENT_TYPE, "application/json")], report.to_json()).into_response()),
        None => Err(ApiError::NotFound(format!("report of '{id}' (state: {:?})", r.state))),
    }
}

async fn experiment_model(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = job(&state, &id)?;
    let r = job.lock();
    match (&r.state, &r.model) {
        (JobState::Done, Some(model)) => Ok((
            [
                (header::CONTENT_TYPE, "application/json".to_string()),
                (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{id}-model.json\"")),
            ],
            model.to_json(),
        )
            .into_response()),
        _ => Err(ApiError::NotFound(format!("model of '{id}'"))),
    }
}

async fn cancel_experiment(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = job(&state, &id)?;
    match state.jobs.cancel(&job) {
        CancelOutcome::Cancelled(s) => Ok((
            StatusCode::ACCEPTED,
            Json(json!({ "job_id": id, "cancel_requested": true, "state": s })),
        )
            .into_response()),
        CancelOutcome::AlreadyFinished(s) => Err(ApiError::Conflict(format!("experiment '{id}' already finished ({s:?})"))),
    }
}

#[derive(Deserialize)]
struct EventQuery {
    /// Only events with a larger sequence number.
    #[serde(default)]
    since: u64,
    /// Keep the stream open until the job finishes.
    #[serde(default = "yes")]
    follow: bool,
}

fn yes() -> bool {
    true
}

/// Stream lines: `{"kind":"progress",...event}` then, once the job is
/// finished, one `{"kind":"state",...}` line.
async fn experiment_events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventQuery>,
) -> Result<Response, ApiError> {
    let job = job(&state, &id)?;
    let rx = job.subscribe();
    struct Cursor {
        job: Arc<Job>,
        rx: tokio::sync::watch::Receiver<u64>,
        next: usize,
        since: u64,
        follow: bool,
        done: bool,
    }
    let cursor = Cursor {
        job,
        rx,
        next: 0,
        since: q.since,
        follow: q.follow,
        done: false,
    };
    let body = stream::unfold(cursor, |mut c| async move {
        loop {
            if c.done {
                return None;
            }
            c.rx.borrow_and_update();
            let (lines, terminal) = {
                let r = c.job.lock();
                let mut out = String::new();
                for e in &r.events[c.next..] {
                    if e.seq > c.since {
                        let mut v = serde_json::to_value(e).expect("event serializes");
                        v["kind"] = json!("progress");
                        out.push_str(&v.to_string());
                        out.push('\n');
                    }
                }
                c.next = r.events.len();
                let terminal = (r.state.is_terminal() || !c.follow).then(|| {
                    let mut v = serde_json::to_value(&r.state).expect("state serializes");
                    v["kind"] = json!("state");
                    v.to_string() + "\n"
                });
                (out, terminal)
            };
            let chunk = match terminal {
                Some(t) => {
                    c.done = true;
                    lines + &t
                }
                None => lines,
            };
            if !chunk.is_empty() {
                return Some((Ok::<_, Infallible>(Bytes::from(chunk)), c));
            }
            if c.rx.changed().await.is_err() {
                c.done = true;
            }
        }
    });
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        Body::from_stream(body),
    )
        .into_response())
}
