use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kgbench_core::sampling::{Judgment, Verdict};
use serde::Deserialize;
use serde_json::json;

use crate::{Service, ServiceError};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::ForeignItem { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Storage(_) => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Load(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let retriable = matches!(self, ServiceError::Storage(_));
        (status, Json(json!({ "error": self.to_string(), "retriable": retriable }))).into_response()
    }
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

/// A judgment as posted; the server stamps it when `timestamp` is absent.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgmentRequest {
    item_id: String,
    verdict: Verdict,
    annotator: String,
    timestamp: Option<u64>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

async fn sessions(State(service): State<Arc<Service>>) -> Response {
    Json(json!({ "sessions": service.session_ids().collect::<Vec<_>>() })).into_response()
}

async fn next(State(service): State<Arc<Service>>, Path(id): Path<String>, Query(q): Query<NextQuery>) -> Response {
    match service.next_task(&id, &q.annotator) {
        Ok(next) => Json(next).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn judgments(
    State(service): State<Arc<Service>>,
    Path(id): Path<String>,
    body: Result<Json<JudgmentRequest>, JsonRejection>,
) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return ServiceError::BadRequest(e.body_text()).into_response(),
    };
    let judgment = Judgment { item_id: req.item_id, verdict: req.verdict, annotator: req.annotator, timestamp: req.timestamp.unwrap_or_else(now_ms) };
    let result = tokio::task::spawn_blocking(move || service.submit_judgment(&id, judgment)).await;
    match result {
        Ok(Ok(ack)) => Json(ack).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ServiceError::Storage(e.to_string()).into_response(),
    }
}

async fn summary(State(service): State<Arc<Service>>, Path(id): Path<String>) -> Response {
    match service.results_summary(&id) {
        Ok(s) => Json(s).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn dashboard(State(service): State<Arc<Service>>, Path(id): Path<String>) -> Response {
    match service.dashboard(&id) {
        Ok(d) => Json(d).into_response(),
        Err(e) => e.into_response(),
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/sessions", get(sessions))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/judgments", post(judgments))
        .route("/sessions/{id}/summary", get(summary))
        .route("/sessions/{id}/dashboard", get(dashboard))
        .with_state(service)
}
