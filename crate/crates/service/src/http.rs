//! Axum routes over [`Service`].

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::Value;

use crate::api::*;
use crate::error::{ApiError, ApiResult};
use crate::session::Service;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.envelope())).into_response()
    }
}

type Shared = Arc<Service>;

fn body<T>(json: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    json.map(|Json(t)| t).map_err(|e| ApiError::bad_request(e.body_text()))
}

/// Runs a handler off the async workers; mining and evolution can take a
/// while on large warehouses.
async fn blocking<T, F>(f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce() -> ApiResult<T> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(v)) => Json(v).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(500, "internal", e.to_string()).into_response(),
    }
}

async fn model(State(s): State<Shared>) -> Response {
    Json(s.model()).into_response()
}

async fn create_cube(State(s): State<Shared>, json: Result<Json<CubeRequest>, JsonRejection>) -> Response {
    match body(json) {
        Ok(req) => blocking(move || s.create_cube(&req)).await,
        Err(e) => e.into_response(),
    }
}

async fn cube_op(
    State(s): State<Shared>,
    Path(id): Path<String>,
    json: Result<Json<OpRequest>, JsonRejection>,
) -> Response {
    match body(json) {
        Ok(op) => blocking(move || s.apply_op(&id, &op)).await,
        Err(e) => e.into_response(),
    }
}

async fn get_cube(
    State(s): State<Shared>,
    Path(id): Path<String>,
    page: Result<Query<Page>, QueryRejection>,
) -> Response {
    match page {
        Ok(Query(p)) => blocking(move || s.cube(&id, p)).await,
        Err(e) => ApiError::bad_request(e.body_text()).into_response(),
    }
}

async fn validate_rules(State(s): State<Shared>, json: Result<Json<RulesRequest>, JsonRejection>) -> Response {
    match body(json) {
        Ok(req) => blocking(move || s.validate_rules(&req)).await,
        Err(e) => e.into_response(),
    }
}

async fn apply_rules(State(s): State<Shared>, json: Result<Json<RulesRequest>, JsonRejection>) -> Response {
    match body(json) {
        Ok(req) => blocking(move || s.apply_rules(&req)).await,
        Err(e) => e.into_response(),
    }
}

fn parse<T: serde::de::DeserializeOwned>(v: Value) -> ApiResult<T> {
    serde_json::from_value(v).map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn mine(
    State(s): State<Shared>,
    Path(task): Path<String>,
    json: Result<Json<Value>, JsonRejection>,
) -> Response {
    let v = match body(json) {
        Ok(v) => v,
        Err(e) => return e.into_response(),
    };
    match task.as_str() {
        "opac" => blocking(move || s.mine_opac(&parse(v)?)).await,
        "mca" => blocking(move || s.mine_mca(&parse(v)?)).await,
        "rules" => blocking(move || s.mine_rules(&parse(v)?)).await,
        other => ApiError::not_found("mining task", other).into_response(),
    }
}

async fn log(State(s): State<Shared>) -> Response {
    Json(s.log()).into_response()
}

/// The API routes, plus static files from `assets` for every other path.
pub fn router(service: Shared, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/model", get(model))
        .route("/cubes", post(create_cube))
        .route("/cubes/{id}", get(get_cube))
        .route("/cubes/{id}/op", post(cube_op))
        .route("/rules/validate", post(validate_rules))
        .route("/rules/apply", post(apply_rules))
        .route("/mine/{task}", post(mine))
        .route("/log", get(log))
        .with_state(service);
    match assets {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::new(404, "unknown-reference", "no such route") }),
    }
}

pub async fn serve(service: Shared, addr: &str, assets: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service, assets)).await
}
