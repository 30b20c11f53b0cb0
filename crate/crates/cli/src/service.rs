//! HTTP endpoints for the map explorer.
//!
//! `GET /healthz`, `GET /api/corpora`, `POST /api/extract` and
//! `GET /api/map/{id}`. The store is only read; extraction responses are
//! kept in a bounded in-memory cache for replay.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;

use crate::error::{AppError, Kind};
use crate::{run_extraction, to_document, ExtractRequest, Store};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub timeout: Duration,
    pub cache_capacity: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            timeout: Duration::from_secs(60),
            cache_capacity: 64,
        }
    }
}

/// Insertion-ordered cache that evicts the oldest entry when full.
#[derive(Debug, Default)]
struct ResponseCache {
    capacity: usize,
    order: VecDeque<String>,
    entries: HashMap<String, Arc<String>>,
}

impl ResponseCache {
    fn get(&self, id: &str) -> Option<Arc<String>> {
        self.entries.get(id).cloned()
    }

    fn put(&mut self, id: String, body: Arc<String>) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.insert(id.clone(), body).is_none() {
            self.order.push_back(id);
        }
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.entries.remove(&old);
            }
        }
    }
}

#[derive(Clone)]
struct AppState {
    store: Arc<Store>,
    cache: Arc<Mutex<ResponseCache>>,
    timeout: Duration,
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.kind.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut body = serde_json::json!({
            "error": self.kind.label(),
            "message": self.message,
        });
        if let Some(class) = self.constraint_class {
            body["constraint_class"] = class.into();
        }
        (status, axum::Json(body)).into_response()
    }
}

fn json(body: Arc<String>) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        body.to_string(),
    )
        .into_response()
}

pub fn router(store: Store, config: ServiceConfig) -> Router {
    let state = AppState {
        store: Arc::new(store),
        cache: Arc::new(Mutex::new(ResponseCache {
            capacity: config.cache_capacity,
            ..ResponseCache::default()
        })),
        timeout: config.timeout,
    };
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/corpora", get(corpora))
        .route("/api/extract", post(extract))
        .route("/api/map/{id}", get(replay))
        .with_state(state)
}

async fn healthz() -> Response {
    axum::Json(serde_json::json!({ "status": "ok" })).into_response()
}

async fn corpora(State(state): State<AppState>) -> Result<Response, AppError> {
    let store = state.store.clone();
    let list = tokio::task::spawn_blocking(move || store.list())
        .await
        .map_err(|e| AppError::new(Kind::Internal, e.to_string()))??;
    Ok(json(Arc::new(to_document(&list)?)))
}

async fn extract(State(state): State<AppState>, body: Bytes) -> Result<Response, AppError> {
    let request = ExtractRequest::from_json(&body)?;
    let store = state.store.clone();
    let task = tokio::task::spawn_blocking(move || {
        run_extraction(&store, &request).and_then(|r| Ok((r.map_id.clone(), to_document(&r)?)))
    });
    let (id, document) = tokio::time::timeout(state.timeout, task)
        .await
        .map_err(|_| AppError::new(Kind::Timeout, "extraction timed out"))?
        .map_err(|e| AppError::new(Kind::Internal, e.to_string()))??;
    let document = Arc::new(document);
    state
        .cache
        .lock()
        .expect("cache lock")
        .put(id, document.clone());
    Ok(json(document))
}

async fn replay(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, AppError> {
    if let Some(body) = state.cache.lock().expect("cache lock").get(&id) {
        return Ok(json(body));
    }
    // maps saved by the command line are served as well
    let store = state.store.clone();
    let body = tokio::task::spawn_blocking(move || store.load_map(&id))
        .await
        .map_err(|e| AppError::new(Kind::Internal, e.to_string()))??;
    Ok(json(Arc::new(body)))
}
