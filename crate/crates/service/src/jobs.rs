//! Job store and bounded worker pool.
//!
//! A job is identified by the run id of its config, so resubmitting the same
//! config finds the same job. Finished jobs are read back from the run
//! directory, which makes their views survive restarts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use evflow::config::{validate, ScenarioConfig};
use evflow::pipeline::{self, MetricsSummary, ResultRecord, Run, RunOptions, RunStatus, StageError};
use log::{info, warn};
use serde::Serialize;
use tokio::sync::mpsc;

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

/// What `GET /jobs/{id}` returns.
#[derive(Debug, Clone, Serialize)]
pub struct JobView {
    pub job_id: String,
    pub state: JobState,
    pub config_hash: String,
    /// Equilibrium iterations completed so far.
    pub progress: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<JobSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobSummary {
    pub converged: bool,
    pub results: Vec<ResultRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSummary>,
}

struct LiveJob {
    state: JobState,
    hash: String,
    config: ScenarioConfig,
    progress: Arc<AtomicUsize>,
    stage: Arc<Mutex<String>>,
    error: Option<StageError>,
}

pub struct JobStore {
    runs_root: PathBuf,
    base: serde_json::Value,
    live: RwLock<BTreeMap<String, LiveJob>>,
    queue: mpsc::UnboundedSender<String>,
}

impl JobStore {
    /// Creates the store and starts `workers` pool tasks on the current
    /// runtime. Each task runs at most one pipeline at a time, taking jobs
    /// in submission order.
    pub fn start(runs_root: PathBuf, base: &ScenarioConfig, workers: usize) -> Result<Arc<Self>, ApiError> {
        let base = serde_json::to_value(base).map_err(|e| ApiError::internal(e.to_string()))?;
        let (tx, rx) = mpsc::unbounded_channel::<String>();
        let store = Arc::new(JobStore {
            runs_root,
            base,
            live: RwLock::new(BTreeMap::new()),
            queue: tx,
        });
        let rx = Arc::new(tokio::sync::Mutex::new(rx));
        for _ in 0..workers.max(1) {
            let (store, rx) = (Arc::clone(&store), Arc::clone(&rx));
            tokio::spawn(async move {
                loop {
                    let next = rx.lock().await.recv().await;
                    match next {
                        Some(id) => store.execute(&id).await,
                        None => break,
                    }
                }
            });
        }
        Ok(store)
    }

    pub fn runs_root(&self) -> &Path {
        &self.runs_root
    }

    /// Merges `fragment` into the base config, validates the result and
    /// enqueues it. Returns the job view and whether the job is new.
    pub fn submit(&self, fragment: &serde_json::Value) -> Result<(JobView, bool), ApiError> {
        let config = self.merged_config(fragment)?;
        let hash = config.hash().map_err(ApiError::from_core)?;
        let id = pipeline::run_id(&hash);
        {
            let mut live = self.live.write().expect("job table lock");
            if !live.contains_key(&id) {
                if let Ok(run) = Run::open(&self.runs_root.join(&id)) {
                    if run.manifest.config_hash == hash {
                        drop(live);
                        return Ok((self.view(&id)?, false));
                    }
                }
                live.insert(
                    id.clone(),
                    LiveJob {
                        state: JobState::Queued,
                        hash,
                        config,
                        progress: Arc::new(AtomicUsize::new(0)),
                        stage: Arc::new(Mutex::new(String::new())),
                        error: None,
                    },
                );
                self.queue
                    .send(id.clone())
                    .map_err(|_| ApiError::internal("worker pool stopped"))?;
                info!("queued job {id}");
                drop(live);
                return Ok((self.view(&id)?, true));
            }
        }
        Ok((self.view(&id)?, false))
    }

    fn merged_config(&self, fragment: &serde_json::Value) -> Result<ScenarioConfig, ApiError> {
        let obj = fragment
            .as_object()
            .ok_or_else(|| ApiError::invalid("config fragment must be an object"))?;
        if obj.contains_key("data") {
            return Err(ApiError::invalid("data files are fixed by the service and cannot be overridden"));
        }
        let mut merged = self.base.clone();
        merge(&mut merged, fragment);
        let config: ScenarioConfig =
            serde_json::from_value(merged).map_err(|e| ApiError::invalid(format!("config fragment: {e}")))?;
        let report = validate(&config);
        if !report.is_ok() {
            return Err(ApiError::violations(report.violations));
        }
        Ok(config)
    }

    /// Current view of a job. Done and failed jobs come from the run store.
    pub fn view(&self, id: &str) -> Result<JobView, ApiError> {
        {
            let live = self.live.read().expect("job table lock");
            if let Some(job) = live.get(id) {
                match job.state {
                    JobState::Queued | JobState::Running => {
                        let stage = job.stage.lock().expect("stage lock").clone();
                        return Ok(JobView {
                            job_id: id.to_string(),
                            state: job.state,
                            config_hash: job.hash.clone(),
                            progress: job.progress.load(Ordering::SeqCst),
                            stage: (!stage.is_empty()).then_some(stage),
                            error: None,
                            summary: None,
                        });
                    }
                    JobState::Failed if job.error.is_some() => {
                        return Ok(JobView {
                            job_id: id.to_string(),
                            state: JobState::Failed,
                            config_hash: job.hash.clone(),
                            progress: job.progress.load(Ordering::SeqCst),
                            stage: job.error.as_ref().map(|e| e.stage.clone()),
                            error: job.error.clone(),
                            summary: None,
                        });
                    }
                    _ => {}
                }
            }
        }
        let run = self.open(id)?;
        view_of_run(id, &run)
    }

    /// The persisted run of a finished job.
    pub fn open(&self, id: &str) -> Result<Run, ApiError> {
        if !valid_id(id) {
            return Err(ApiError::not_found("job", id));
        }
        Run::open(&self.runs_root.join(id)).map_err(|_| ApiError::not_found("job", id))
    }

    /// The run of a job that finished successfully.
    pub fn done_run(&self, id: &str) -> Result<Run, ApiError> {
        let view = self.view(id)?;
        if view.state != JobState::Done {
            return Err(ApiError::conflict(format!("job {id} is {:?}, not done", view.state).to_lowercase()));
        }
        self.open(id)
    }

    async fn execute(self: &Arc<Self>, id: &str) {
        let (config, progress, stage) = {
            let mut live = self.live.write().expect("job table lock");
            let Some(job) = live.get_mut(id) else { return };
            job.state = JobState::Running;
            (job.config.clone(), Arc::clone(&job.progress), Arc::clone(&job.stage))
        };
        info!("running job {id}");
        let options = RunOptions {
            force: false,
            workers: None,
            progress: Some(Arc::new(move |name: &str, iterations: usize| {
                *stage.lock().expect("stage lock") = name.to_string();
                progress.store(iterations, Ordering::SeqCst);
            })),
        };
        let root = self.runs_root.clone();
        let outcome = tokio::task::spawn_blocking(move || pipeline::run_pipeline(&config, &root, &options)).await;
        let mut live = self.live.write().expect("job table lock");
        let Some(job) = live.get_mut(id) else { return };
        match outcome {
            Ok(Ok(_)) => job.state = JobState::Done,
            Ok(Err(e)) => {
                warn!("job {id} failed: {e}");
                job.state = JobState::Failed;
                let stage = job.stage.lock().expect("stage lock").clone();
                job.error = Some(
                    Run::open(&self.runs_root.join(id))
                        .ok()
                        .and_then(|r| r.manifest.error)
                        .unwrap_or(StageError {
                            stage,
                            message: e.to_string(),
                        }),
                );
            }
            Err(e) => {
                job.state = JobState::Failed;
                job.error = Some(StageError {
                    stage: "worker".into(),
                    message: e.to_string(),
                });
            }
        }
    }
}

fn view_of_run(id: &str, run: &Run) -> Result<JobView, ApiError> {
    let m = &run.manifest;
    Ok(match m.status {
        RunStatus::Complete => JobView {
            job_id: id.to_string(),
            state: JobState::Done,
            config_hash: m.config_hash.clone(),
            progress: m.results.iter().map(|r| r.iterations).sum(),
            stage: None,
            error: None,
            summary: Some(JobSummary {
                converged: m.converged(),
                results: m.results.clone(),
                metrics: run.metrics().map_err(ApiError::from_core)?,
            }),
        },
        RunStatus::Failed => JobView {
            job_id: id.to_string(),
            state: JobState::Failed,
            config_hash: m.config_hash.clone(),
            progress: m.results.iter().map(|r| r.iterations).sum(),
            stage: m.error.as_ref().map(|e| e.stage.clone()),
            error: m.error.clone(),
            summary: None,
        },
    })
}

/// Run ids are lowercase hex; anything else cannot name a run directory.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Recursive object merge; non-object values in `patch` replace.
fn merge(target: &mut serde_json::Value, patch: &serde_json::Value) {
    match (target, patch) {
        (serde_json::Value::Object(t), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                merge(t.entry(k.clone()).or_insert(serde_json::Value::Null), v);
            }
        }
        (t, p) => *t = p.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn merge_is_deep() {
        let mut a = json!({"solver": {"max_iterations": 10, "gap": 1e-4}, "run": {"hour": 8}});
        merge(&mut a, &json!({"solver": {"max_iterations": 50}, "scenarios": {"lambdas": [0.5]}}));
        assert_eq!(
            a,
            json!({"solver": {"max_iterations": 50, "gap": 1e-4}, "run": {"hour": 8}, "scenarios": {"lambdas": [0.5]}})
        );
    }

    #[test]
    fn ids_are_hex() {
        assert!(valid_id("0a1b2c"));
        assert!(!valid_id("../etc"));
        assert!(!valid_id(""));
    }
}
