use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use evflow::assign::AssignmentResult;
use evflow::demand::load_zones;
use evflow::pipeline::{Engine, EventDemand, Inputs, Run};
use evflow::strategy::{Reduction, Savings, SegmentDelta, StrategyParams};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::jobs::JobView;
use crate::{AppState, API_VERSION};

/// Reductions listed in a what-if payload.
const PREVIEW_ROWS: usize = 20;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/jobs", post(submit))
        .route("/api/v1/jobs/{id}", get(status))
        .route("/api/v1/jobs/{id}/zones/{zone}", get(zone_times))
        .route("/api/v1/jobs/{id}/whatif", get(whatif))
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "api_version": API_VERSION,
        "status": "ok",
        "engine_version": evflow::pipeline::engine_version(),
    }))
}

#[derive(Serialize)]
struct JobDoc {
    api_version: u32,
    job: JobView,
}

/// Body of `POST /jobs`: `{"config": {...}}`, a partial config merged
/// into the base config.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitRequest {
    #[serde(default = "empty_object")]
    config: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

async fn submit(State(state): State<Arc<AppState>>, body: axum::body::Bytes) -> Result<Response, ApiError> {
    let req: SubmitRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::invalid(format!("request body: {e}")))?;
    let (job, created) = state.jobs.submit(&req.config)?;
    let code = if created { StatusCode::ACCEPTED } else { StatusCode::OK };
    Ok((
        code,
        Json(JobDoc {
            api_version: API_VERSION,
            job,
        }),
    )
        .into_response())
}

async fn status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<JobDoc>, ApiError> {
    Ok(Json(JobDoc {
        api_version: API_VERSION,
        job: state.jobs.view(&id)?,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneQuery {
    /// Result label such as `selfish` or `mixed_0.5`; defaults to `selfish`.
    scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTimes {
    pub api_version: u32,
    pub job_id: String,
    pub scenario: String,
    pub origin: String,
    /// One entry per destination with demand from `origin`, sorted by zone.
    pub destinations: Vec<ZoneTime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTime {
    pub dest: String,
    pub minutes: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_minutes: Option<f64>,
    /// `(minutes - baseline) / baseline * 100`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub increment_pct: Option<f64>,
}

async fn zone_times(
    State(state): State<Arc<AppState>>,
    Path((id, zone)): Path<(String, String)>,
    Query(q): Query<ZoneQuery>,
) -> Result<Json<ZoneTimes>, ApiError> {
    let run = state.jobs.done_run(&id)?;
    let config = run.config().map_err(ApiError::from_core)?;
    let zones = load_zones(&config.data.zones).map_err(ApiError::from_core)?;
    if !zones.iter().any(|z| z.zone_id == zone) {
        return Err(ApiError::not_found("zone", &zone));
    }
    let scenario = match q.scenario {
        Some(s) => s,
        None if run.labels().iter().any(|l| l == "selfish") => "selfish".to_string(),
        None => run.labels().last().cloned().unwrap_or_else(|| "baseline".into()),
    };
    let during = run.result(&scenario).map_err(ApiError::from_core)?;
    let baseline = run.result("baseline").map_err(ApiError::from_core)?;
    let before = baseline.od_time_map();
    let destinations = during
        .od_times
        .iter()
        .filter(|t| t.origin == zone)
        .map(|t| {
            let b = before.get(&evflow::OdPair::new(t.origin.clone(), t.dest.clone())).copied();
            ZoneTime {
                dest: t.dest.clone(),
                minutes: t.time,
                baseline_minutes: b,
                increment_pct: b.map(|b| if b > 0.0 { (t.time - b) / b * 100.0 } else { 0.0 }),
            }
        })
        .collect();
    Ok(Json(ZoneTimes {
        api_version: API_VERSION,
        job_id: id,
        scenario,
        origin: zone,
        destinations,
    }))
}

/// Savings summary and plan preview for one parameter tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfPayload {
    pub api_version: u32,
    pub job_id: String,
    pub params: StrategyParams,
    /// False when the re-assignment stopped before reaching its gap tolerance.
    pub converged: bool,
    pub savings: Savings,
    pub reduced_ods: usize,
    /// The first reductions of the plan, in plan order.
    pub top_reductions: Vec<Reduction>,
    pub segments: Vec<SegmentDelta>,
}

/// Loaded inputs and the selfish equilibrium a job's what-if queries share.
struct StrategyBase {
    inputs: Inputs,
    event: EventDemand,
    selfish: AssignmentResult,
}

impl StrategyBase {
    fn load(run: &Run) -> Result<Self, ApiError> {
        let config = run.config().map_err(ApiError::from_core)?;
        let inputs = Inputs::load(&config).map_err(ApiError::from_core)?;
        let event = run.event_demand().map_err(ApiError::from_core)?;
        let selfish = match run.result("selfish") {
            Ok(r) => r,
            Err(_) => Engine::new(&inputs, None).selfish(&event).map_err(ApiError::from_core)?,
        };
        Ok(StrategyBase { inputs, event, selfish })
    }
}

/// Serialized payloads keyed by job id and parameter bits.
type PayloadCache = HashMap<(String, [u64; 4]), Arc<Vec<u8>>>;

#[derive(Default)]
pub(crate) struct WhatIfCache {
    bases: Mutex<HashMap<String, Arc<StrategyBase>>>,
    payloads: Mutex<PayloadCache>,
}

fn cache_key(p: &StrategyParams) -> [u64; 4] {
    [
        p.radius_km.to_bits(),
        p.top_k as u64,
        p.reduction_fraction.to_bits(),
        p.mode as u64,
    ]
}

async fn whatif(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<StrategyParams>,
) -> Result<Response, ApiError> {
    params.validate().map_err(ApiError::from_core)?;
    let key = (id.clone(), cache_key(&params));
    let cached = state.whatif.payloads.lock().expect("cache lock").get(&key).cloned();
    if let Some(bytes) = cached {
        return Ok(json_bytes(bytes, "hit"));
    }
    let run = state.jobs.done_run(&id)?;
    let st = Arc::clone(&state);
    let job = id.clone();
    let bytes = tokio::task::spawn_blocking(move || -> Result<Arc<Vec<u8>>, ApiError> {
        let base = {
            let known = st.whatif.bases.lock().expect("cache lock").get(&job).cloned();
            match known {
                Some(b) => b,
                None => {
                    let b = Arc::new(StrategyBase::load(&run)?);
                    st.whatif.bases.lock().expect("cache lock").insert(job.clone(), Arc::clone(&b));
                    b
                }
            }
        };
        let plan = Engine::new(&base.inputs, None)
            .strategy(&base.event, &base.selfish, &params)
            .map_err(ApiError::from_core)?;
        let payload = WhatIfPayload {
            api_version: API_VERSION,
            job_id: job,
            params,
            converged: plan.savings.converged,
            savings: plan.savings.clone(),
            reduced_ods: plan.reductions.len(),
            top_reductions: plan.reductions.iter().take(PREVIEW_ROWS).cloned().collect(),
            segments: plan.ridership.clone(),
        };
        serde_json::to_vec(&payload)
            .map(Arc::new)
            .map_err(|e| ApiError::internal(e.to_string()))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    let stored = Arc::clone(
        state
            .whatif
            .payloads
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert(bytes),
    );
    Ok(json_bytes(stored, "miss"))
}

fn json_bytes(bytes: Arc<Vec<u8>>, cache: &'static str) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json"), (header::HeaderName::from_static("x-cache"), cache)],
        bytes.as_ref().clone(),
    )
        .into_response()
}
