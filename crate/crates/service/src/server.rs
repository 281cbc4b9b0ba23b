//! Startup and graceful shutdown.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use nearme_core::commitments::{CommitmentError, CommitmentStore};
use thiserror::Error;
use tokio::net::TcpListener;

use crate::app::{router, spawn_refresh_loop, AppState, RouterOptions};
use crate::config::AppConfig;
use crate::snapshot::{SnapshotError, SnapshotSpec};
use crate::stats::Providers;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("loading data: {0}")]
    Snapshot(#[from] SnapshotError),
    #[error("{path}: {source}")]
    Commitments { path: String, source: CommitmentError },
    #[error("binding {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

/// A bound, fully loaded server that has not started accepting yet.
pub struct Server {
    listener: TcpListener,
    state: Arc<AppState>,
    options: RouterOptions,
    refresh_interval: std::time::Duration,
}

impl Server {
    /// Loads the first snapshot and opens the commitment log before binding,
    /// so bad data or config never leaves a half-started listener.
    pub async fn bind(cfg: &AppConfig) -> Result<Self, ServeError> {
        let store = CommitmentStore::open(&cfg.commitment_log).map_err(|source| ServeError::Commitments {
            path: cfg.commitment_log.display().to_string(),
            source,
        })?;
        let providers = Providers {
            client: reqwest::Client::new(),
            geocoder: cfg.geocoder.clone(),
            isochrone: cfg.isochrone_provider.clone(),
        };
        let state = Arc::new(AppState::new(SnapshotSpec::from(cfg), store, providers));
        state.refresh().await?;
        let listener = TcpListener::bind(&cfg.listen).await.map_err(|source| ServeError::Bind {
            addr: cfg.listen.clone(),
            source,
        })?;
        Ok(Self {
            listener,
            state,
            options: RouterOptions {
                cors_origin: cfg.cors_origin.clone(),
                static_dir: cfg.static_dir.clone(),
            },
            refresh_interval: cfg.refresh_interval,
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn state(&self) -> Arc<AppState> {
        self.state.clone()
    }

    /// Serves until `shutdown` resolves, then drains requests and syncs the
    /// commitment log.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServeError> {
        let refresher = spawn_refresh_loop(self.state.clone(), self.refresh_interval);
        let app = router(self.state.clone(), &self.options);
        let served = axum::serve(self.listener, app).with_graceful_shutdown(shutdown).await;
        refresher.abort();
        let synced = self.state.store.sync();
        served?;
        synced.map_err(|source| ServeError::Commitments {
            path: self.state.store.path().display().to_string(),
            source,
        })
    }
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        if tokio::signal::ctrl_c().await.is_err() {
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutting down");
}
