//! HTTP front end for scenario runs.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/v1/health` | liveness and versions |
//! | POST | `/api/v1/jobs` | submit a config fragment |
//! | GET | `/api/v1/jobs/{id}` | job state, progress, result summary |
//! | GET | `/api/v1/jobs/{id}/zones/{zone}` | travel times from one origin |
//! | GET | `/api/v1/jobs/{id}/whatif` | strategy savings for query parameters |
//!
//! Every body carries `api_version`. The data directory holds `config.toml`,
//! the base config that fragments are merged into, and a `runs/` store.

mod api;
mod error;
mod jobs;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use evflow::config::ScenarioConfig;

pub use api::{router, WhatIfPayload, ZoneTime, ZoneTimes};
pub use error::ApiError;
pub use jobs::{JobState, JobStore, JobSummary, JobView};

/// Version of every request and response document.
pub const API_VERSION: u32 = 1;

/// Name of the base config inside the data directory.
pub const BASE_CONFIG: &str = "config.toml";

/// Shared state behind the router.
pub struct AppState {
    pub jobs: Arc<JobStore>,
    whatif: api::WhatIfCache,
}

impl AppState {
    /// Loads `data_dir/config.toml` and starts `workers` solver slots.
    /// Must be called inside a tokio runtime.
    pub fn open(data_dir: &Path, workers: usize) -> Result<Arc<Self>, ApiError> {
        let base = ScenarioConfig::load(&data_dir.join(BASE_CONFIG)).map_err(ApiError::from_core)?;
        let report = evflow::config::validate(&base);
        if !report.is_ok() {
            return Err(ApiError::violations(report.violations));
        }
        Self::with_base(data_dir.join("runs"), &base, workers)
    }

    pub fn with_base(runs_root: PathBuf, base: &ScenarioConfig, workers: usize) -> Result<Arc<Self>, ApiError> {
        Ok(Arc::new(AppState {
            jobs: JobStore::start(runs_root, base, workers)?,
            whatif: Default::default(),
        }))
    }
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, data_dir: &Path, workers: usize) -> std::io::Result<()> {
    let state = AppState::open(data_dir, workers).map_err(|e| std::io::Error::other(e.message))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
