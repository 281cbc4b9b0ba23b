//! HTTP facade over the core pipeline: local drive-time stats, commitment
//! endpoints and a periodically refreshed data snapshot.

pub mod app;
pub mod config;
pub mod error;
pub mod server;
pub mod snapshot;
pub mod stats;

pub use app::{router, AppState, RouterOptions};
pub use config::{AppConfig, DataPaths};
pub use error::{ApiError, ErrorBody};
pub use server::{shutdown_signal, Server};
pub use snapshot::{build_snapshot, Snapshot, SnapshotError, SnapshotSpec};
pub use stats::{local_stats, to_json_bytes, LocalQuery, LocalStatsResponse, Providers};
