//! Run store behaviour: caching, failure records, exports and config hashing.

use std::path::Path;

use evflow::config::{ScenarioConfig, StrategyBlock};
use evflow::fixtures::{self, Bundle};
use evflow::pipeline::{export, run_pipeline, ExportFormat, Run, RunOptions, RunStatus};
use evflow::strategy::PlanMode;
use evflow::Error;

fn config_in(bundle: &Bundle, dir: &Path) -> ScenarioConfig {
    std::fs::create_dir_all(dir).unwrap();
    bundle.config(dir).unwrap()
}

fn with_sweep(mut c: ScenarioConfig) -> ScenarioConfig {
    c.scenarios.lambdas = vec![0.5];
    c.scenarios.sweep = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    c.strategy = Some(StrategyBlock {
        radius_km: 1.0,
        top_k: 2,
        reduction_fraction: 0.6,
        mode: PlanMode::Marginal,
        sweep_top_k: vec![1, 2],
        commuter_occupancy: 1.0,
    });
    c
}

#[test]
fn complete_run_persists_every_result() {
    let dir = tempfile::tempdir().unwrap();
    let config = with_sweep(config_in(&fixtures::diamond(), &dir.path().join("data")));
    let run = run_pipeline(&config, &dir.path().join("runs"), &RunOptions::default()).unwrap();
    assert_eq!(run.manifest.status, RunStatus::Complete);
    let stages: Vec<&str> = run.manifest.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(stages, ["load", "baseline", "event_demand", "scenarios", "metrics", "strategy"]);
    assert!(run.manifest.stages.iter().all(|s| s.done));
    for label in ["baseline", "habit", "selfish", "altruism", "mixed_0.5", "mixed_0", "mixed_1"] {
        assert!(run.labels().iter().any(|l| l == label), "{label} in {:?}", run.labels());
        run.result(label).unwrap();
    }
    // the sweep endpoints reproduce the pure scenarios
    let habit = run.result("habit").unwrap();
    let zero = run.result("mixed_0").unwrap();
    assert_eq!(zero.volumes(), habit.volumes());
    let metrics = run.metrics().unwrap().unwrap();
    let labels: Vec<Option<&str>> = metrics.lambda_sweep.iter().map(|p| p.label.as_deref()).collect();
    assert_eq!(labels, [Some("habit"), None, None, None, Some("selfish")]);
    assert_eq!(run.topk_sweep().unwrap().len(), 4);
    assert!(run.strategy(PlanMode::Uniform).unwrap().is_some());

    let reopened = Run::open(&run.dir).unwrap();
    assert_eq!(reopened.manifest, run.manifest);
}

#[test]
fn completed_runs_are_reused_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(&fixtures::braess(), &dir.path().join("data"));
    let runs = dir.path().join("runs");
    let first = run_pipeline(&config, &runs, &RunOptions::default()).unwrap();
    let marker = first.dir.join("marker");
    std::fs::write(&marker, "kept").unwrap();

    let second = run_pipeline(&config, &runs, &RunOptions::default()).unwrap();
    assert_eq!(second.dir, first.dir);
    assert!(marker.exists(), "cached run was rebuilt");

    let forced = RunOptions {
        force: true,
        ..Default::default()
    };
    let third = run_pipeline(&config, &runs, &forced).unwrap();
    assert_eq!(third.dir, first.dir);
    assert!(!marker.exists(), "forced run kept stale files");
}

#[test]
fn failed_stage_leaves_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut bundle = fixtures::diamond();
    // D has no outgoing links, so this pair cannot be routed
    bundle.demand[0] = bundle.demand[0].clone().with("ZD", "ZA", 10.0, 12.0, 10.0);
    let config = config_in(&bundle, &dir.path().join("data"));
    let runs = dir.path().join("runs");
    let err = run_pipeline(&config, &runs, &RunOptions::default()).err().expect("run fails");
    assert!(matches!(err, Error::Unreachable(_)), "{err}");

    let run_dir = std::fs::read_dir(&runs).unwrap().next().unwrap().unwrap().path();
    let run = Run::open(&run_dir).unwrap();
    assert_eq!(run.manifest.status, RunStatus::Failed);
    let failure = run.manifest.error.as_ref().unwrap();
    assert_eq!(failure.stage, "baseline");
    assert!(failure.message.contains("ZD -> ZA"), "{}", failure.message);
    assert!(run.manifest.stages.iter().any(|s| s.name == "load" && s.done));
    assert!(run.manifest.stages.iter().all(|s| s.name != "baseline" || !s.done));

    // a failed run is not treated as a cache hit
    let again = run_pipeline(&config, &runs, &RunOptions::default()).err().expect("run fails");
    assert!(matches!(again, Error::Unreachable(_)));
}

#[test]
fn export_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let config = with_sweep(config_in(&fixtures::bottleneck(), &dir.path().join("data")));
    let run = run_pipeline(&config, &dir.path().join("runs"), &RunOptions::default()).unwrap();
    let a = export(&run.dir, &dir.path().join("a"), ExportFormat::Csv).unwrap();
    let b = export(&run.dir, &dir.path().join("b"), ExportFormat::Csv).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.strip_prefix(dir.path().join("a")).unwrap(), y.strip_prefix(dir.path().join("b")).unwrap());
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let json = export(&run.dir, &dir.path().join("j"), ExportFormat::Json).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&json[0]).unwrap()).unwrap();
    assert!(doc["results"]["selfish"].is_object());
    assert_eq!(doc["plans"].as_array().unwrap().len(), 2);
}

#[test]
fn export_without_events_writes_header_only_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(&fixtures::braess(), &dir.path().join("data"));
    let run = run_pipeline(&config, &dir.path().join("runs"), &RunOptions::default()).unwrap();
    let out = dir.path().join("out");
    export(&run.dir, &out, ExportFormat::Csv).unwrap();
    for f in ["lambda_sweep.csv", "topk_sweep.csv", "tourist_demand.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().count(), 1, "{f}: {text}");
    }
    assert!(!out.join("strategy").exists());
    // without tourists every event scenario equals the baseline volumes
    let base = run.result("baseline").unwrap();
    assert_eq!(run.result("habit").unwrap().volumes(), base.volumes());
}

#[test]
fn export_of_missing_run_fails() {
    let dir = tempfile::tempdir().unwrap();
    let err = export(&dir.path().join("nope"), &dir.path().join("out"), ExportFormat::Csv).unwrap_err();
    assert!(matches!(err, Error::NotFound { kind: "run", .. }), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_hash_ignores_key_order_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let here = config_in(&fixtures::diamond(), &dir.path().join("one"));
    let there = config_in(&fixtures::diamond(), &dir.path().join("two"));
    assert_eq!(here.hash().unwrap(), there.hash().unwrap());

    let text = r#"
[solver]
relative_gap_tol = 0.0001
max_iterations = 200

[run]
date = "2016-08-10"
hour = 8

[data]
zones = "zones.csv"
links = "links.csv"
demand = "demand.csv"
nodes = "nodes.csv"
"#;
    let reordered = r#"
[data]
nodes = "nodes.csv"
links = "links.csv"
demand = "demand.csv"
zones = "zones.csv"

[run]
hour = 8
date = "2016-08-10"

[solver]
max_iterations = 200
relative_gap_tol = 0.0001
"#;
    let base = dir.path().join("one");
    let a = ScenarioConfig::from_toml(text, &base).unwrap();
    let b = ScenarioConfig::from_toml(reordered, &base).unwrap();
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());

    // a parameter or a data byte changes the hash
    let mut c = a.clone();
    c.solver.max_iterations = 201;
    assert_ne!(c.hash().unwrap(), a.hash().unwrap());
    let demand = base.join("demand.csv");
    let mut bytes = std::fs::read(&demand).unwrap();
    bytes.extend_from_slice(b"8,ZB,ZC,1,1,1\n");
    std::fs::write(&demand, bytes).unwrap();
    let after = ScenarioConfig::from_toml(text, &base).unwrap().hash().unwrap();
    assert_ne!(after, there.hash().unwrap());
}
