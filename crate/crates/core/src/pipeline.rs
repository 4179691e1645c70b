//! End-to-end runs: baseline equilibrium, event demand, behavioural
//! scenarios, impact metrics and the mode-change strategy, persisted in a
//! run directory named after the config hash.
//!
//! Run directory layout:
//!
//! ```text
//! manifest.json            stages, convergence flags, config hash
//! config.toml              resolved config snapshot
//! results/<scenario>.json  full assignment results
//! demand/tourist.json      generated event demand
//! metrics/summary.json     impact reports and the lambda sweep
//! strategy/<mode>.json     strategy plans; strategy/topk_sweep.json
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use serde::{Deserialize, Serialize};

use crate::assign::{Assigner, AssignmentResult, Scenario};
use crate::config::{validate, ScenarioConfig};
use crate::demand::{
    combine, generate_event_demand, load_demand, load_residences, load_sessions, load_venues, load_zones,
    write_demand, DemandMatrix, EventInputs, OdPair, TouristDemand, Zone,
};
use crate::error::{Error, Result};
use crate::io::{self, LambdaRow, TopKRow};
use crate::metrics::{commuter_increment, impact_report, ImpactReport};
use crate::network::{load_network, load_overlay, RoadNetwork};
use crate::strategy::{
    load_lines, Occupancy, PlanMode, StrategyContext, StrategyParams, StrategyPlan, TransitNetwork,
};

/// Version of the run-directory and export formats.
pub const FORMAT_VERSION: u32 = 1;

/// Histogram bin width for time (minutes) and increment (percent) summaries.
pub const HISTOGRAM_BIN: f64 = 5.0;

/// Datasets of one config, loaded and cross-checked.
pub struct Inputs {
    pub config: ScenarioConfig,
    pub network: RoadNetwork,
    /// `network` with Olympic lanes and the overlay file applied.
    pub event_network: RoadNetwork,
    pub zones: Vec<Zone>,
    /// Baseline demand of the study hour.
    pub demand: DemandMatrix,
    pub transit: Option<TransitNetwork>,
    events: Option<EventData>,
}

struct EventData {
    venues: Vec<crate::demand::Venue>,
    sessions: Vec<crate::demand::EventSession>,
    residences: Vec<crate::demand::Residence>,
}

impl Inputs {
    pub fn load(config: &ScenarioConfig) -> Result<Self> {
        validate(config).into_result()?;
        let d = &config.data;
        let network = load_network(&d.nodes, &d.links, config.bpr)?;
        let mut overlay = network.lane_overlay();
        if let Some(p) = &d.overlay {
            overlay = overlay.merged(&load_overlay(p)?);
        }
        let event_network = network.apply_overlay(&overlay)?;
        let zones = load_zones(&d.zones)?;
        let mut hourly = load_demand(&d.demand, config.run.day_scale)?;
        let demand = hourly.remove(&config.run.hour).ok_or_else(|| {
            Error::Validation(vec![format!("no demand for hour {}", config.run.hour)])
        })?;
        let transit = match &d.lines {
            Some(p) => Some(TransitNetwork::new(load_lines(p)?)?),
            None => None,
        };
        let events = match (&d.venues, &d.sessions, &d.residences) {
            (Some(v), Some(s), Some(r)) => Some(EventData {
                venues: load_venues(v)?,
                sessions: load_sessions(s)?,
                residences: load_residences(r)?,
            }),
            _ => None,
        };
        Ok(Inputs {
            config: config.clone(),
            network,
            event_network,
            zones,
            demand,
            transit,
            events,
        })
    }
}

/// Event demand of the study hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDemand {
    pub tourist: TouristDemand,
    /// Tourist vehicles only.
    pub delta: DemandMatrix,
    /// Baseline plus tourist vehicles.
    pub total: DemandMatrix,
}

impl EventDemand {
    pub fn tourist_pairs(&self) -> Vec<OdPair> {
        self.delta
            .flows
            .iter()
            .filter(|(_, f)| f.vehicles > 0.0)
            .map(|(od, _)| od.clone())
            .collect()
    }
}

/// Computes individual stages over loaded inputs.
pub struct Engine<'a> {
    inputs: &'a Inputs,
    workers: Option<usize>,
}

impl<'a> Engine<'a> {
    pub fn new(inputs: &'a Inputs, workers: Option<usize>) -> Self {
        Engine { inputs, workers }
    }

    pub fn inputs(&self) -> &Inputs {
        self.inputs
    }

    fn assigner<'n>(&self, network: &'n RoadNetwork) -> Result<Assigner<'n>> {
        let a = Assigner::new(network, &self.inputs.zones, self.inputs.config.solver)?;
        match self.workers {
            Some(w) => a.with_workers(w),
            None => Ok(a),
        }
    }

    pub fn event_assigner(&self) -> Result<Assigner<'a>> {
        self.assigner(&self.inputs.event_network)
    }

    /// User equilibrium of the baseline demand on the unmodified network.
    pub fn baseline(&self) -> Result<AssignmentResult> {
        let mut r = self.assigner(&self.inputs.network)?.solve_ue(&self.inputs.demand)?;
        r.scenario = Scenario::Baseline;
        Ok(r)
    }

    pub fn event_demand(&self) -> Result<EventDemand> {
        let hour = self.inputs.config.run.hour;
        let tourist = match (&self.inputs.events, &self.inputs.transit) {
            (Some(ev), Some(transit)) => {
                let stations = transit.stations();
                let inputs = EventInputs {
                    venues: &ev.venues,
                    sessions: &ev.sessions,
                    residences: &ev.residences,
                    zones: &self.inputs.zones,
                    stations: &stations,
                    split: &self.inputs.config.departure_split,
                    modes: &self.inputs.config.modes,
                };
                generate_event_demand(&inputs, &self.inputs.config.run.date, hour)?
            }
            _ => TouristDemand {
                hour,
                ..Default::default()
            },
        };
        let mut delta = combine(&DemandMatrix::new(hour), &tourist.vehicles)?;
        delta.day_scale = self.inputs.demand.day_scale;
        let total = combine(&self.inputs.demand, &tourist.vehicles)?;
        Ok(EventDemand { tourist, delta, total })
    }

    pub fn habit(&self, baseline: &AssignmentResult, event: &EventDemand) -> Result<AssignmentResult> {
        self.event_assigner()?
            .solve_habit(baseline, &event.delta, &baseline.times())
    }

    pub fn selfish(&self, event: &EventDemand) -> Result<AssignmentResult> {
        self.event_assigner()?.solve_ue(&event.total)
    }

    pub fn altruism(&self, event: &EventDemand) -> Result<AssignmentResult> {
        self.event_assigner()?.solve_so(&event.total)
    }

    pub fn mixed(&self, habit: &AssignmentResult, event: &EventDemand, lambda: f64) -> Result<AssignmentResult> {
        self.event_assigner()?.solve_mixed(habit, &event.total, lambda)
    }

    /// Evaluates one strategy against `selfish`, the equilibrium of the event demand.
    pub fn strategy(
        &self,
        event: &EventDemand,
        selfish: &AssignmentResult,
        params: &StrategyParams,
    ) -> Result<StrategyPlan> {
        let transit = self
            .inputs
            .transit
            .as_ref()
            .ok_or_else(|| Error::Validation(vec!["strategy requires a lines file".into()]))?;
        let assigner = self.event_assigner()?;
        let tourist_vehicles = event.tourist.vehicle_flows();
        let ctx = StrategyContext {
            assigner: &assigner,
            zones: &self.inputs.zones,
            transit,
            demand: &event.total,
            tourist_vehicles: &tourist_vehicles,
            occupancy: self.occupancy(),
            before: selfish,
        };
        ctx.evaluate(params)
    }

    pub fn occupancy(&self) -> Occupancy {
        Occupancy {
            commuter: self
                .inputs
                .config
                .strategy
                .as_ref()
                .map_or(1.0, |s| s.commuter_occupancy),
            tourist_taxi: self.inputs.config.modes.taxi_occupancy,
        }
    }

    pub fn report(
        &self,
        baseline: &AssignmentResult,
        during: &AssignmentResult,
        event: &EventDemand,
    ) -> Result<ImpactReport> {
        impact_report(
            baseline,
            during,
            &self.inputs.demand,
            &event.tourist_pairs(),
            &self.inputs.event_network,
            HISTOGRAM_BIN,
        )
    }
}

/// Persisted summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub engine_version: String,
    pub config_hash: String,
    /// Parameters with data files replaced by content digests.
    pub config: serde_json::Value,
    pub status: RunStatus,
    pub stages: Vec<StageRecord>,
    /// One entry per persisted assignment result.
    pub results: Vec<ResultRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<StageError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub label: String,
    pub scenario: Scenario,
    pub converged: bool,
    pub relative_gap: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

impl Manifest {
    /// Every equilibrium in the run reached its gap tolerance.
    pub fn converged(&self) -> bool {
        self.results.iter().all(|r| r.converged)
    }
}

/// Impact metrics and the selfish-fraction sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub format_version: u32,
    pub baseline_collective_time: f64,
    pub reports: Vec<ImpactReport>,
    pub lambda_sweep: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    /// `habit` at 0 and `selfish` at 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub commuter_increment_pct: f64,
    pub collective_time: f64,
    pub converged: bool,
}

/// Savings for one `(mode, top_k)` pair of the strategy sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKPoint {
    pub radius_km: f64,
    pub top_k: usize,
    pub mode: PlanMode,
    pub removed_vph: f64,
    pub demand_removed_pct: f64,
    pub saving_pct: f64,
    pub converged: bool,
}

/// Progress notifications: stage name and equilibrium iterations so far.
pub type Progress = Arc<dyn Fn(&str, usize) + Send + Sync>;

#[derive(Clone, Default)]
pub struct RunOptions {
    /// Recompute even when a complete run with the same hash exists.
    pub force: bool,
    /// Path-search threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub progress: Option<Progress>,
}

/// Directory of the run for `config` under `runs_root`.
pub fn run_dir(runs_root: &Path, config: &ScenarioConfig) -> Result<PathBuf> {
    Ok(runs_root.join(run_id(&config.hash()?)))
}

/// Short run identifier derived from a config hash.
pub fn run_id(hash: &str) -> String {
    hash[..16.min(hash.len())].to_string()
}

pub fn result_label(s: &Scenario) -> String {
    s.to_string()
}

/// A persisted run.
pub struct Run {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Run {
    pub fn open(dir: &Path) -> Result<Run> {
        let path = dir.join("manifest.json");
        if !path.is_file() {
            return Err(Error::NotFound {
                kind: "run",
                id: dir.display().to_string(),
            });
        }
        Ok(Run {
            dir: dir.to_path_buf(),
            manifest: io::read_json(&path)?,
        })
    }

    pub fn config(&self) -> Result<ScenarioConfig> {
        ScenarioConfig::load(&self.dir.join("config.toml"))
    }

    pub fn result(&self, label: &str) -> Result<AssignmentResult> {
        let p = self.dir.join("results").join(format!("{label}.json"));
        if !p.is_file() {
            return Err(Error::NotFound {
                kind: "result",
                id: label.to_string(),
            });
        }
        io::read_json(&p)
    }

    pub fn labels(&self) -> Vec<String> {
        self.manifest.results.iter().map(|r| r.label.clone()).collect()
    }

    pub fn event_demand(&self) -> Result<EventDemand> {
        io::read_json(&self.dir.join("demand").join("event.json"))
    }

    pub fn metrics(&self) -> Result<Option<MetricsSummary>> {
        let p = self.dir.join("metrics").join("summary.json");
        if p.is_file() {
            io::read_json(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn strategy(&self, mode: PlanMode) -> Result<Option<StrategyPlan>> {
        let p = self.dir.join("strategy").join(format!("{mode}.json"));
        if p.is_file() {
            io::read_json(&p).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn topk_sweep(&self) -> Result<Vec<TopKPoint>> {
        let p = self.dir.join("strategy").join("topk_sweep.json");
        if p.is_file() {
            io::read_json(&p)
        } else {
            Ok(Vec::new())
        }
    }
}

struct Recorder {
    dir: PathBuf,
    manifest: Manifest,
    iterations: usize,
    progress: Option<Progress>,
}

impl Recorder {
    fn stage(&mut self, name: &str) {
        info!("stage {name}");
        self.manifest.stages.push(StageRecord {
            name: name.to_string(),
            done: false,
        });
        if let Some(p) = &self.progress {
            p(name, self.iterations);
        }
    }

    fn done(&mut self) {
        if let Some(s) = self.manifest.stages.last_mut() {
            s.done = true;
        }
    }

    fn current(&self) -> String {
        self.manifest
            .stages
            .last()
            .map(|s| s.name.clone())
            .unwrap_or_else(|| "load".to_string())
    }

    fn result(&mut self, r: &AssignmentResult) -> Result<()> {
        let label = result_label(&r.scenario);
        io::write_json(&self.dir.join("results").join(format!("{label}.json")), r)?;
        self.iterations += r.iterations;
        if let Some(p) = &self.progress {
            p(&label, self.iterations);
        }
        self.manifest.results.retain(|x| x.label != label);
        self.manifest.results.push(ResultRecord {
            label,
            scenario: r.scenario,
            converged: r.converged,
            relative_gap: r.relative_gap,
            iterations: r.iterations,
        });
        Ok(())
    }

    fn save(&self) -> Result<()> {
        io::write_json(&self.dir.join("manifest.json"), &self.manifest)
    }
}

/// Runs every configured stage, persisting into `runs_root/<run id>`. A
/// complete run with the same config hash is reused unless `options.force`.
/// A failing stage aborts the run and leaves a manifest naming it.
pub fn run_pipeline(config: &ScenarioConfig, runs_root: &Path, options: &RunOptions) -> Result<Run> {
    let hash = config.hash()?;
    let dir = runs_root.join(run_id(&hash));
    if !options.force {
        if let Ok(run) = Run::open(&dir) {
            if run.manifest.status == RunStatus::Complete && run.manifest.config_hash == hash {
                info!("reusing cached run {}", dir.display());
                return Ok(run);
            }
        }
    }
    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    std::fs::write(dir.join("config.toml"), config.to_toml()?).map_err(|e| Error::io(&dir, e))?;

    let mut rec = Recorder {
        dir: dir.clone(),
        manifest: Manifest {
            format_version: FORMAT_VERSION,
            engine_version: engine_version().to_string(),
            config_hash: hash,
            config: config.canonical()?,
            status: RunStatus::Failed,
            stages: Vec::new(),
            results: Vec::new(),
            error: None,
        },
        iterations: 0,
        progress: options.progress.clone(),
    };
    let outcome = stages(config, options, &mut rec);
    match outcome {
        Ok(()) => {
            rec.manifest.status = RunStatus::Complete;
            rec.save()?;
            Ok(Run {
                dir,
                manifest: rec.manifest,
            })
        }
        Err(e) => {
            rec.manifest.error = Some(StageError {
                stage: rec.current(),
                message: e.to_string(),
            });
            rec.save()?;
            Err(e)
        }
    }
}

fn stages(config: &ScenarioConfig, options: &RunOptions, rec: &mut Recorder) -> Result<()> {
    rec.stage("load");
    let inputs = Inputs::load(config)?;
    let engine = Engine::new(&inputs, options.workers);
    rec.done();

    rec.stage("baseline");
    let baseline = engine.baseline()?;
    rec.result(&baseline)?;
    rec.done();

    rec.stage("event_demand");
    let event = engine.event_demand()?;
    io::write_json(&rec.dir.join("demand").join("event.json"), &event)?;
    rec.done();

    rec.stage("scenarios");
    let sel = &config.scenarios;
    let mut results: Vec<AssignmentResult> = Vec::new();
    let needs_habit = sel.habit || !sel.lambdas.is_empty() || !sel.sweep.is_empty();
    let habit = if needs_habit {
        Some(engine.habit(&baseline, &event)?)
    } else {
        None
    };
    let strategy = config.strategy.as_ref();
    let needs_selfish = sel.selfish || strategy.is_some();
    let selfish = if needs_selfish { Some(engine.selfish(&event)?) } else { None };
    if sel.habit {
        results.extend(habit.clone());
    }
    if sel.selfish {
        results.extend(selfish.clone());
    }
    if sel.altruism {
        results.push(engine.altruism(&event)?);
    }
    let mut mixed: BTreeMap<u64, AssignmentResult> = BTreeMap::new();
    if let Some(h) = &habit {
        for &l in sel.lambdas.iter().chain(&sel.sweep) {
            if let std::collections::btree_map::Entry::Vacant(e) = mixed.entry(l.to_bits()) {
                let r = engine.mixed(h, &event, l)?;
                e.insert(r.clone());
                results.push(r);
            }
        }
    }
    for r in &results {
        rec.result(r)?;
    }
    rec.done();

    rec.stage("metrics");
    let mut reports = Vec::new();
    for r in &results {
        reports.push(engine.report(&baseline, r, &event)?);
    }
    let mut lambda_sweep = Vec::new();
    for &l in &sel.sweep {
        let r = &mixed[&l.to_bits()];
        lambda_sweep.push(SweepPoint {
            lambda: l,
            label: if l == 0.0 {
                Some("habit".into())
            } else if l == 1.0 {
                Some("selfish".into())
            } else {
                None
            },
            commuter_increment_pct: commuter_increment(&baseline, r, &inputs.demand)?.pct,
            collective_time: r.total_time(),
            converged: r.converged,
        });
    }
    let summary = MetricsSummary {
        format_version: FORMAT_VERSION,
        baseline_collective_time: baseline.total_time(),
        reports,
        lambda_sweep,
    };
    io::write_json(&rec.dir.join("metrics").join("summary.json"), &summary)?;
    rec.done();

    if let (Some(block), Some(selfish)) = (strategy, &selfish) {
        rec.stage("strategy");
        let dir = rec.dir.join("strategy");
        let base = block.params();
        for mode in [PlanMode::Marginal, PlanMode::Uniform] {
            let plan = engine.strategy(&event, selfish, &StrategyParams { mode, ..base })?;
            io::write_json(&dir.join(format!("{mode}.json")), &plan)?;
        }
        let mut sweep = Vec::new();
        for &k in &block.sweep_top_k {
            for mode in [PlanMode::Marginal, PlanMode::Uniform] {
                let params = StrategyParams { top_k: k, mode, ..base };
                let plan = engine.strategy(&event, selfish, &params)?;
                sweep.push(TopKPoint {
                    radius_km: params.radius_km,
                    top_k: k,
                    mode,
                    removed_vph: plan.savings.removed_vehicles,
                    demand_removed_pct: plan.savings.demand_removed_pct,
                    saving_pct: plan.savings.saving_pct,
                    converged: plan.savings.converged,
                });
            }
        }
        io::write_json(&dir.join("topk_sweep.json"), &sweep)?;
        rec.done();
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    /// Delimited tables plus a JSON summary.
    Csv,
    /// One JSON document holding everything.
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Validation(vec![format!(
                "unknown export format `{other}` (expected csv or json)"
            )])),
        }
    }
}

/// Machine-readable summary written next to the exported tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub format_version: u32,
    pub manifest: Manifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSummary>,
    pub strategy: Vec<StrategySummary>,
    pub topk_sweep: Vec<TopKPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub params: StrategyParams,
    pub savings: crate::strategy::Savings,
}

/// Writes the tables of the run in `run_dir` into `out`. Column order is
/// fixed, so re-exporting the same run gives identical bytes.
pub fn export(run_dir: &Path, out: &Path, format: ExportFormat) -> Result<Vec<PathBuf>> {
    let run = Run::open(run_dir)?;
    let metrics = run.metrics()?;
    let mut plans = Vec::new();
    for mode in [PlanMode::Marginal, PlanMode::Uniform] {
        if let Some(p) = run.strategy(mode)? {
            plans.push(p);
        }
    }
    let summary = ExportSummary {
        format_version: FORMAT_VERSION,
        manifest: run.manifest.clone(),
        metrics: metrics.clone(),
        strategy: plans
            .iter()
            .map(|p| StrategySummary {
                params: p.params,
                savings: p.savings.clone(),
            })
            .collect(),
        topk_sweep: run.topk_sweep()?,
    };
    let mut written = Vec::new();
    match format {
        ExportFormat::Json => {
            let results: BTreeMap<String, AssignmentResult> = run
                .labels()
                .into_iter()
                .map(|l| run.result(&l).map(|r| (l, r)))
                .collect::<Result<_>>()?;
            let doc = serde_json::json!({
                "summary": summary,
                "results": results,
                "plans": plans,
            });
            io::write_json(&track(&mut written, out.join("export.json")), &doc)?;
        }
        ExportFormat::Csv => {
            for label in run.labels() {
                written.extend(write_result_tables(&out.join(&label), &run.result(&label)?)?);
            }
            if let Ok(event) = run.event_demand() {
                write_demand(&track(&mut written, out.join("tourist_demand.csv")), [&event.delta])?;
            }
            let sweep: Vec<LambdaRow> = metrics
                .iter()
                .flat_map(|m| &m.lambda_sweep)
                .map(|p| LambdaRow {
                    lambda: p.lambda,
                    commuter_increment_pct: p.commuter_increment_pct,
                    collective_time: p.collective_time,
                    converged: p.converged,
                })
                .collect();
            io::write_table(&track(&mut written, out.join("lambda_sweep.csv")), &sweep)?;
            let topk: Vec<TopKRow> = summary
                .topk_sweep
                .iter()
                .map(|p| TopKRow {
                    radius_km: p.radius_km,
                    top_k: p.top_k,
                    mode: p.mode.to_string(),
                    removed_vph: p.removed_vph,
                    demand_removed_pct: p.demand_removed_pct,
                    saving_pct: p.saving_pct,
                    converged: p.converged,
                })
                .collect();
            io::write_table(&track(&mut written, out.join("topk_sweep.csv")), &topk)?;
            for p in &plans {
                written.extend(write_plan_tables(&out.join("strategy").join(p.params.mode.to_string()), p)?);
            }
            written.push(out.join("summary.json"));
            io::write_json(&out.join("summary.json"), &summary)?;
        }
    }
    Ok(written)
}

/// Version of this engine, recorded in manifests and config hashes.
pub fn engine_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

fn track(written: &mut Vec<PathBuf>, p: PathBuf) -> PathBuf {
    written.push(p.clone());
    p
}

/// Writes `links.csv`, `od.csv` and `paths.csv` of one result into `dir`.
pub fn write_result_tables(dir: &Path, result: &AssignmentResult) -> Result<Vec<PathBuf>> {
    let files = [dir.join("links.csv"), dir.join("od.csv"), dir.join("paths.csv")];
    io::write_table(&files[0], &io::link_rows(result))?;
    io::write_table(&files[1], &io::od_rows(result))?;
    io::write_table(&files[2], &io::path_rows(result))?;
    Ok(files.to_vec())
}

/// Writes `reductions.csv`, `segments.csv` and `savings.json` of one plan into `dir`.
pub fn write_plan_tables(dir: &Path, plan: &StrategyPlan) -> Result<Vec<PathBuf>> {
    let files = [dir.join("reductions.csv"), dir.join("segments.csv"), dir.join("savings.json")];
    io::write_table(&files[0], &io::reduction_rows(&plan.reductions))?;
    io::write_table(&files[1], &io::segment_rows(&plan.ridership))?;
    io::write_json(&files[2], &plan.savings)?;
    Ok(files.to_vec())
}
