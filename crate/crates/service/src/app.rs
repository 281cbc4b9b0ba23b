//! Shared state, routes and the snapshot refresh loop.

use std::collections::HashMap;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nearme_core::commitments::{CommitmentItems, CommitmentStore};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::trace::TraceLayer;

use crate::error::ApiError;
use crate::snapshot::{build_snapshot, Snapshot, SnapshotError, SnapshotSpec};
use crate::stats::{local_stats, to_json_bytes, LocalQuery, Providers};

pub struct AppState {
    snapshot: RwLock<Option<Arc<Snapshot>>>,
    pub store: Arc<CommitmentStore>,
    pub providers: Providers,
    pub spec: SnapshotSpec,
}

impl AppState {
    pub fn new(spec: SnapshotSpec, store: CommitmentStore, providers: Providers) -> Self {
        Self {
            snapshot: RwLock::new(None),
            store: Arc::new(store),
            providers,
            spec,
        }
    }

    /// The published snapshot; the read lock is held only to clone the `Arc`.
    pub fn current(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn publish(&self, s: Snapshot) {
        let s = Arc::new(s);
        *self.snapshot.write().unwrap_or_else(|p| p.into_inner()) = Some(s);
    }

    /// Rebuilds from disk and publishes on success; on failure the served
    /// snapshot stays as it was.
    pub async fn refresh(&self) -> Result<String, SnapshotError> {
        let spec = self.spec.clone();
        let built = tokio::task::spawn_blocking(move || build_snapshot(&spec))
            .await
            .map_err(|e| SnapshotError::Inconsistent(format!("snapshot build panicked: {e}")))??;
        for (path, w) in &built.warnings {
            tracing::warn!(path = %path.display(), warning = ?w, "data warning");
        }
        let version = built.data_version.clone();
        let previous = self.current().map(|s| s.data_version.clone());
        self.publish(built);
        if previous.as_deref() != Some(version.as_str()) {
            tracing::info!(data_version = %version, "published snapshot");
        }
        Ok(version)
    }
}

/// Calls [`AppState::refresh`] every `interval`, logging failures.
pub fn spawn_refresh_loop(state: Arc<AppState>, interval: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(interval);
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        tick.tick().await;
        loop {
            tick.tick().await;
            if let Err(e) = state.refresh().await {
                tracing::error!(error = %e, "refresh failed; still serving the previous snapshot");
            }
        }
    })
}

#[derive(Debug, Default, Clone)]
pub struct RouterOptions {
    pub cors_origin: Option<String>,
    pub static_dir: Option<PathBuf>,
}

pub fn router(state: Arc<AppState>, opts: &RouterOptions) -> Router {
    let mut app = Router::new()
        .route("/api/local-stats", get(handle_local_stats))
        .route("/api/commitments", post(handle_commit))
        .route("/api/commitments/count", get(handle_count))
        .route("/api/commitments/{id}/share", post(handle_share))
        .route("/healthz", get(handle_health))
        .with_state(state);
    if let Some(dir) = opts.static_dir.clone() {
        app = app.fallback(move |uri: Uri| serve_static(dir.clone(), uri));
    }
    if let Some(origin) = &opts.cors_origin {
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            match HeaderValue::from_str(origin) {
                Ok(v) => AllowOrigin::exact(v),
                Err(_) => {
                    tracing::warn!(origin, "ignoring invalid cors_origin");
                    return app.layer(TraceLayer::new_for_http());
                }
            }
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    app.layer(TraceLayer::new_for_http())
}

async fn handle_local_stats(
    State(state): State<Arc<AppState>>,
    params: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(params) = params.map_err(|e| ApiError::bad_query(e.body_text()))?;
    let get = |k: &str| params.get(k).map(String::as_str);
    let query = LocalQuery::from_params(get("lat"), get("lon"), get("place"))?;
    let snap = state.current().ok_or_else(ApiError::no_snapshot)?;
    let resp = local_stats(&snap, &state.providers, &query).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], to_json_bytes(&resp)).into_response())
}

#[derive(Deserialize)]
struct CommitBody {
    items: [bool; 5],
}

async fn handle_commit(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let body: CommitBody = serde_json::from_slice(&body).map_err(|e| ApiError::bad_body(e.to_string()))?;
    let items = CommitmentItems::new(body.items)?;
    let store = state.store.clone();
    let receipt = tokio::task::spawn_blocking(move || store.make_commitment(items))
        .await
        .map_err(ApiError::internal)??;
    Ok(Json(receipt).into_response())
}

async fn handle_count(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "total": state.store.total() }))
}

#[derive(Deserialize)]
struct ShareBody {
    channel: String,
}

async fn handle_share(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let body: ShareBody = serde_json::from_slice(&body).map_err(|e| ApiError::bad_body(e.to_string()))?;
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || store.record_share(&id, &body.channel))
        .await
        .map_err(ApiError::internal)??;
    Ok(Json(json!({ "ok": true })).into_response())
}

async fn handle_health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let version = state.current().map(|s| s.data_version.clone());
    Json(json!({ "status": "ok", "data_version": version }))
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "woff2" => "font/woff2",
        "txt" => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

async fn serve_static(root: PathBuf, uri: Uri) -> Response {
    let rel = Path::new(uri.path().trim_start_matches('/'));
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let mut path = root.join(rel);
    if tokio::fs::metadata(&path).await.is_ok_and(|m| m.is_dir()) {
        path.push("index.html");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}
