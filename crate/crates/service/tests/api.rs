use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use evflow::config::{ScenarioConfig, StrategyBlock};
use evflow::fixtures;
use evflow::io::{read_table, OdRow};
use evflow::pipeline::{export, ExportFormat};
use evflow::strategy::PlanMode;
use evflow_service::{router, AppState, WhatIfPayload, ZoneTimes};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    cache: Option<String>,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).expect("json body")
    }
}

async fn call(state: &Arc<AppState>, method: &str, uri: &str, body: Option<Value>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(v) => Body::from(v.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    let resp = router(Arc::clone(state)).oneshot(req).await.unwrap();
    let status = resp.status();
    let cache = resp
        .headers()
        .get("x-cache")
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, cache, bytes }
}

fn base_config(dir: &Path) -> ScenarioConfig {
    let mut c = fixtures::diamond().config(dir).unwrap();
    c.strategy = Some(StrategyBlock {
        radius_km: 1.0,
        top_k: 2,
        reduction_fraction: 0.6,
        mode: PlanMode::Marginal,
        sweep_top_k: Vec::new(),
        commuter_occupancy: 1.0,
    });
    c
}

async fn wait_done(state: &Arc<AppState>, id: &str) -> Value {
    for _ in 0..600 {
        let r = call(state, "GET", &format!("/api/v1/jobs/{id}"), None).await;
        let v = r.json();
        match v["job"]["state"].as_str().unwrap() {
            "done" | "failed" => return v,
            _ => tokio::time::sleep(Duration::from_millis(20)).await,
        }
    }
    panic!("job {id} did not finish");
}

async fn submit(state: &Arc<AppState>, fragment: Value) -> Reply {
    call(state, "POST", "/api/v1/jobs", Some(json!({ "config": fragment }))).await
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn health_reports_versions() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::with_base(dir.path().join("runs"), &base_config(dir.path()), 1).unwrap();
    let r = call(&state, "GET", "/api/v1/health", None).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["api_version"], 1);
    assert_eq!(v["status"], "ok");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn submit_rejects_invalid_fragments() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::with_base(dir.path().join("runs"), &base_config(dir.path()), 1).unwrap();

    let r = submit(&state, json!({"scenarios": {"lambdas": [1.5]}})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let v = r.json();
    assert_eq!(v["api_version"], 1);
    assert_eq!(v["error"]["kind"], "validation");
    let violations = v["error"]["violations"].as_array().unwrap();
    assert!(violations.iter().any(|x| x["message"].as_str().unwrap().contains("1.5")), "{v}");

    let r = submit(&state, json!({"solver": {"max_iter": 3}})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(r.json()["error"]["message"].as_str().unwrap().contains("max_iter"));

    let r = submit(&state, json!({"data": {"nodes": "/etc/passwd"}})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let r = call(&state, "POST", "/api/v1/jobs", Some(json!({"cfg": {}}))).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unknown_job_is_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::with_base(dir.path().join("runs"), &base_config(dir.path()), 1).unwrap();
    for uri in [
        "/api/v1/jobs/abc123",
        "/api/v1/jobs/..%2F..%2Fetc",
        "/api/v1/jobs/abc123/zones/ZA",
        "/api/v1/jobs/abc123/whatif",
    ] {
        let r = call(&state, "GET", uri, None).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(r.json()["error"]["kind"], "not_found");
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn job_lifecycle_zone_times_and_whatif() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let state = AppState::with_base(runs.clone(), &base_config(dir.path()), 1).unwrap();

    let first = submit(&state, json!({"scenarios": {"lambdas": [0.5]}})).await;
    assert_eq!(first.status, StatusCode::ACCEPTED);
    let job = first.json()["job"].clone();
    let id = job["job_id"].as_str().unwrap().to_string();
    assert!(["queued", "running", "done"].contains(&job["state"].as_str().unwrap()));
    assert!(job["progress"].as_u64().is_some());

    // Duplicate submission, with keys in another order, finds the same job.
    let again = submit(&state, json!({"scenarios": {"lambdas": [0.5]}, "run": {"day_scale": 1.0}})).await;
    assert!(again.status == StatusCode::OK || again.status == StatusCode::ACCEPTED);
    assert_eq!(again.json()["job"]["job_id"], id.as_str());

    let done = wait_done(&state, &id).await;
    assert_eq!(done["job"]["state"], "done", "{done}");
    let summary = &done["job"]["summary"];
    assert_eq!(summary["converged"], true);
    let labels: Vec<&str> = summary["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["baseline", "habit", "selfish", "altruism", "mixed_0.5"]);
    assert!(done["job"]["progress"].as_u64().unwrap() > 0);

    // Zone times equal the persisted OD tables.
    let out = dir.path().join("export");
    export(&runs.join(&id), &out, ExportFormat::Csv).unwrap();
    let during: Vec<OdRow> = read_table(&out.join("selfish").join("od.csv")).unwrap();
    let before: Vec<OdRow> = read_table(&out.join("baseline").join("od.csv")).unwrap();
    let r = call(&state, "GET", &format!("/api/v1/jobs/{id}/zones/ZA"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let zt: ZoneTimes = serde_json::from_slice(&r.bytes).unwrap();
    assert_eq!(zt.scenario, "selfish");
    let expected: Vec<&OdRow> = during.iter().filter(|o| o.origin == "ZA").collect();
    assert_eq!(zt.destinations.len(), expected.len());
    for (got, row) in zt.destinations.iter().zip(expected) {
        assert_eq!(got.dest, row.dest);
        assert_eq!(got.minutes, row.time_min);
        let b = before
            .iter()
            .find(|o| o.origin == row.origin && o.dest == row.dest)
            .unwrap()
            .time_min;
        assert_eq!(got.baseline_minutes, Some(b));
        let pct = (row.time_min - b) / b * 100.0;
        assert!((got.increment_pct.unwrap() - pct).abs() < 1e-12);
    }

    // Other scenarios by label; destination-only zones give an empty map.
    let r = call(&state, "GET", &format!("/api/v1/jobs/{id}/zones/ZB?scenario=mixed_0.5"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["scenario"], "mixed_0.5");
    let r = call(&state, "GET", &format!("/api/v1/jobs/{id}/zones/ZD"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.json()["destinations"].as_array().unwrap().is_empty());
    let r = call(&state, "GET", &format!("/api/v1/jobs/{id}/zones/NOPE"), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    // What-if: zero fraction saves nothing.
    let q = |mode: &str, fraction: f64| {
        format!("/api/v1/jobs/{id}/whatif?radius_km=1&top_k=2&reduction_fraction={fraction}&mode={mode}")
    };
    let r = call(&state, "GET", &q("marginal", 0.0), None).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
    let zero: WhatIfPayload = serde_json::from_slice(&r.bytes).unwrap();
    assert_eq!(zero.savings.saving_pct, 0.0);
    assert_eq!(zero.savings.removed_vehicles, 0.0);

    // Marginal at least as good as uniform with the same removed total.
    let m = call(&state, "GET", &q("marginal", 0.6), None).await;
    let u = call(&state, "GET", &q("uniform", 0.6), None).await;
    let (m, u): (WhatIfPayload, WhatIfPayload) =
        (serde_json::from_slice(&m.bytes).unwrap(), serde_json::from_slice(&u.bytes).unwrap());
    assert!((m.savings.removed_vehicles - u.savings.removed_vehicles).abs() < 1e-6);
    assert!(m.savings.saving_pct >= u.savings.saving_pct);
    assert!(m.converged && u.converged);
    assert!(!m.segments.is_empty());

    // A repeated query is served from the cache with identical bytes.
    let a = call(&state, "GET", &q("marginal", 0.6), None).await;
    let b = call(&state, "GET", &q("marginal", 0.6), None).await;
    assert_eq!(a.cache.as_deref(), Some("hit"));
    assert_eq!(a.bytes, b.bytes);

    let r = call(&state, "GET", &format!("/api/v1/jobs/{id}/whatif?reduction_fraction=1.5"), None).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    // A fresh service over the same store answers identically.
    let status_before = call(&state, "GET", &format!("/api/v1/jobs/{id}"), None).await.bytes;
    let zones_before = call(&state, "GET", &format!("/api/v1/jobs/{id}/zones/ZA"), None).await.bytes;
    let restarted = AppState::with_base(runs, &base_config(dir.path()), 1).unwrap();
    let status_after = call(&restarted, "GET", &format!("/api/v1/jobs/{id}"), None).await.bytes;
    let zones_after = call(&restarted, "GET", &format!("/api/v1/jobs/{id}/zones/ZA"), None).await.bytes;
    assert_eq!(status_before, status_after);
    assert_eq!(zones_before, zones_after);
    let whatif_after = call(&restarted, "GET", &q("marginal", 0.6), None).await;
    assert_eq!(whatif_after.cache.as_deref(), Some("miss"));
    assert_eq!(whatif_after.bytes, a.bytes);

    // And resubmitting there finds the finished job.
    let r = submit(&restarted, json!({"scenarios": {"lambdas": [0.5]}})).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["job"]["state"], "done");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn failing_stage_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut bundle = fixtures::diamond();
    // No link leaves D, so this pair cannot be routed.
    let d = bundle.demand.iter_mut().find(|d| d.hour == bundle.hour).unwrap();
    *d = d.clone().with("ZD", "ZA", 10.0, 12.0, 10.0);
    let base = bundle.config(dir.path()).unwrap();
    let state = AppState::with_base(dir.path().join("runs"), &base, 1).unwrap();
    let r = submit(&state, json!({})).await;
    assert_eq!(r.status, StatusCode::ACCEPTED, "{}", String::from_utf8_lossy(&r.bytes));
    let id = r.json()["job"]["job_id"].as_str().unwrap().to_string();
    let v = wait_done(&state, &id).await;
    assert_eq!(v["job"]["state"], "failed");
    assert_eq!(v["job"]["error"]["stage"], "baseline");
    assert!(v["job"]["error"]["message"].as_str().unwrap().contains("ZD"));

    let r = call(&state, "GET", &format!("/api/v1/jobs/{id}/zones/ZA"), None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn queued_jobs_all_finish_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::with_base(dir.path().join("runs"), &base_config(dir.path()), 1).unwrap();
    let mut ids = Vec::new();
    for l in [0.2, 0.4, 0.6] {
        let r = submit(&state, json!({"scenarios": {"habit": false, "altruism": false, "lambdas": [l]}})).await;
        assert_eq!(r.status, StatusCode::ACCEPTED);
        ids.push(r.json()["job"]["job_id"].as_str().unwrap().to_string());
    }
    // With one slot, a later job never finishes before an earlier one starts.
    let mut seen_done = false;
    for _ in 0..2000 {
        let states: Vec<String> = job_states(&state, &ids).await;
        let running = states.iter().filter(|s| *s == "running").count();
        assert!(running <= 1, "{states:?}");
        if let Some(first_queued) = states.iter().position(|s| s == "queued") {
            assert!(states[first_queued..].iter().all(|s| s == "queued"), "{states:?}");
        }
        if states.iter().all(|s| s == "done") {
            seen_done = true;
            break;
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    assert!(seen_done);
}

/// States in submission order, read newest first: a job seen started
/// implies every earlier job had started before it was read.
async fn job_states(state: &Arc<AppState>, ids: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for id in ids.iter().rev() {
        let v = call(state, "GET", &format!("/api/v1/jobs/{id}"), None).await.json();
        out.push(v["job"]["state"].as_str().unwrap().to_string());
    }
    out.reverse();
    out
}
