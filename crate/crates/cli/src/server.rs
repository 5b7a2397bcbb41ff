//! HTTP front end of the task service. Bodies are JSON; errors come back as
//! `{"error": "..."}` with a 4xx/5xx status.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use redund_core::service::{BatchStatus, ImageRecord, RoundOutcome, Service, TaskKind, TaskView};
use redund_core::{Error, PolygonOutline};

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::IneligibleWorker(_) => StatusCode::FORBIDDEN,
            Error::UnknownTask(_) | Error::UnknownBatch(_) | Error::UnknownImage(_) => StatusCode::NOT_FOUND,
            Error::NotAssigned { .. }
            | Error::WrongKind { .. }
            | Error::VoteCapReached(_)
            | Error::AnnotationCapReached { .. }
            | Error::RoundAlreadyRun(_)
            | Error::RoundOneIncomplete(_) => StatusCode::CONFLICT,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Image(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateBatch {
    pub manifest: PathBuf,
    pub kind: TaskKind,
    #[serde(default)]
    pub extra: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BatchCreated {
    pub batch_id: u64,
    pub tasks: Vec<u64>,
}

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    pub worker: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VoteSubmission {
    pub worker_id: String,
    pub votes: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SegmentationSubmission {
    pub worker_id: String,
    pub polygons: Vec<PolygonOutline>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RoundRequest {
    pub method: String,
    pub scores: BTreeMap<String, f64>,
    pub budget: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Ack {
    pub task_id: u64,
    pub accepted: bool,
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/batches", post(create_batch))
        .route("/batches/{id}/status", get(batch_status))
        .route("/batches/{id}/report", get(batch_report))
        .route("/batches/{id}/round", post(adaptive_round))
        .route("/tasks/next", get(next_task))
        .route("/tasks/{id}/vote", post(submit_vote))
        .route("/tasks/{id}/segmentation", post(submit_segmentation))
        .with_state(service)
}

async fn create_batch(State(s): State<Arc<Service>>, Json(body): Json<CreateBatch>) -> ApiResult<BatchCreated> {
    let (batch_id, tasks) = s.create_batch(&body.manifest, body.kind, body.extra)?;
    Ok(Json(BatchCreated { batch_id, tasks }))
}

async fn next_task(State(s): State<Arc<Service>>, Query(q): Query<NextQuery>) -> Result<Response, ApiError> {
    Ok(match s.next_task(&q.worker)? {
        Some(t) => Json::<TaskView>(t).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn submit_vote(
    State(s): State<Arc<Service>>,
    Path(task_id): Path<u64>,
    Json(body): Json<VoteSubmission>,
) -> ApiResult<Ack> {
    s.submit_vote(task_id, &body.worker_id, &body.votes)?;
    Ok(Json(Ack { task_id, accepted: true }))
}

async fn submit_segmentation(
    State(s): State<Arc<Service>>,
    Path(task_id): Path<u64>,
    Json(body): Json<SegmentationSubmission>,
) -> ApiResult<Ack> {
    s.submit_segmentation(task_id, &body.worker_id, &body.polygons)?;
    Ok(Json(Ack { task_id, accepted: true }))
}

async fn batch_status(State(s): State<Arc<Service>>, Path(id): Path<u64>) -> ApiResult<BatchStatus> {
    Ok(Json(s.batch_status(id)?))
}

async fn batch_report(State(s): State<Arc<Service>>, Path(id): Path<u64>) -> ApiResult<Vec<ImageRecord>> {
    Ok(Json(s.batch_report(id)?))
}

async fn adaptive_round(
    State(s): State<Arc<Service>>,
    Path(id): Path<u64>,
    Json(body): Json<RoundRequest>,
) -> ApiResult<RoundOutcome> {
    Ok(Json(s.run_adaptive_round(id, &body.method, &body.scores, body.budget)?))
}
