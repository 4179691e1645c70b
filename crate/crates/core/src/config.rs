//! Scenario configuration: a TOML file naming the datasets and every model
//! parameter, plus whole-bundle validation and a content hash.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assign::SolverConfig;
use crate::cost::BprParams;
use crate::demand::{self, DepartureSplit, ModeSplitConfig};
use crate::error::{Error, Result};
use crate::io;
use crate::network;
use crate::strategy::{self, PlanMode, StrategyParams};

/// Dataset files. Relative paths are resolved against the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub nodes: PathBuf,
    pub links: PathBuf,
    pub zones: PathBuf,
    pub demand: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venues: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residences: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lines: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay: Option<PathBuf>,
}

impl DataPaths {
    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.nodes, &mut self.links, &mut self.zones, &mut self.demand] {
            fix(p);
        }
        for p in [
            &mut self.venues,
            &mut self.sessions,
            &mut self.residences,
            &mut self.lines,
            &mut self.overlay,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// `(role, path)` of every configured file.
    pub fn files(&self) -> Vec<(&'static str, &Path)> {
        let mut out: Vec<(&'static str, &Path)> = vec![
            ("nodes", &self.nodes),
            ("links", &self.links),
            ("zones", &self.zones),
            ("demand", &self.demand),
        ];
        for (role, p) in [
            ("venues", &self.venues),
            ("sessions", &self.sessions),
            ("residences", &self.residences),
            ("lines", &self.lines),
            ("overlay", &self.overlay),
        ] {
            if let Some(p) = p {
                out.push((role, p));
            }
        }
        out
    }

    /// Venues, sessions and residences are all present.
    pub fn has_events(&self) -> bool {
        self.venues.is_some() && self.sessions.is_some() && self.residences.is_some()
    }
}

/// Which scenario-hour to study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSelection {
    pub hour: u8,
    /// Event date matched against session dates.
    #[serde(default)]
    pub date: String,
    #[serde(default = "one")]
    pub day_scale: f64,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSelection {
    #[serde(default = "yes")]
    pub habit: bool,
    #[serde(default = "yes")]
    pub selfish: bool,
    #[serde(default = "yes")]
    pub altruism: bool,
    /// Mixed runs to persist.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// Selfish fractions of the increment curve.
    #[serde(default)]
    pub sweep: Vec<f64>,
}

impl Default for ScenarioSelection {
    fn default() -> Self {
        ScenarioSelection {
            habit: true,
            selfish: true,
            altruism: true,
            lambdas: Vec::new(),
            sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyBlock {
    #[serde(default = "default_radius")]
    pub radius_km: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_fraction")]
    pub reduction_fraction: f64,
    #[serde(default = "default_mode")]
    pub mode: PlanMode,
    /// `top_k` values of the savings curve; both modes are evaluated.
    #[serde(default)]
    pub sweep_top_k: Vec<usize>,
    /// Persons per removed non-tourist vehicle.
    #[serde(default = "one")]
    pub commuter_occupancy: f64,
}

fn default_radius() -> f64 {
    StrategyParams::default().radius_km
}
fn default_top_k() -> usize {
    StrategyParams::default().top_k
}
fn default_fraction() -> f64 {
    StrategyParams::default().reduction_fraction
}
fn default_mode() -> PlanMode {
    PlanMode::Marginal
}

impl StrategyBlock {
    pub fn params(&self) -> StrategyParams {
        StrategyParams {
            radius_km: self.radius_km,
            top_k: self.top_k,
            reduction_fraction: self.reduction_fraction,
            mode: self.mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub data: DataPaths,
    pub run: RunSelection,
    #[serde(default)]
    pub bpr: BprParams,
    #[serde(default)]
    pub modes: ModeSplitConfig,
    #[serde(default)]
    pub departure_split: DepartureSplit,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub scenarios: ScenarioSelection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyBlock>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Format { message, .. } => Error::format(path, message),
            other => other,
        })
    }

    /// Parses TOML text, resolving relative data paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| format!("line {}: ", text[..s.start].matches('\n').count() + 1))
                .unwrap_or_default();
            Error::format("<config>", format!("{at}{}", e.message()))
        })?;
        cfg.data.resolve(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::format("<config>", e.to_string()))
    }

    /// Config with every data path replaced by the SHA-256 of the file's
    /// bytes, as a JSON value with sorted keys.
    pub fn canonical(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self)?;
        let mut digests = serde_json::Map::new();
        for (role, path) in self.data.files() {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            digests.insert(role.to_string(), hex(&Sha256::digest(&bytes)).into());
        }
        v["data"] = serde_json::Value::Object(digests);
        Ok(v)
    }

    /// Identifies the run: equal for configs with the same parameters and
    /// the same data file contents, whatever the key order or file location.
    pub fn hash(&self) -> Result<String> {
        let canonical = serde_json::json!({
            "engine": env!("CARGO_PKG_VERSION"),
            "config": self.canonical()?,
        });
        Ok(hex(&Sha256::digest(serde_json::to_vec(&canonical)?)))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.file, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{l}: {}", p.display(), self.message),
            (Some(p), None) => write!(f, "{}: {}", p.display(), self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn param(&mut self, r: Result<()>) {
        if let Err(e) = r {
            self.error(None, e);
        }
    }

    fn error(&mut self, file: Option<&Path>, e: Error) {
        match e {
            Error::Validation(msgs) => {
                for message in msgs {
                    self.violations.push(Violation {
                        file: file.map(Path::to_path_buf),
                        line: None,
                        message,
                    });
                }
            }
            Error::Format { path, message } => self.violations.push(Violation {
                file: Some(path),
                line: None,
                message,
            }),
            other => self.violations.push(Violation {
                file: file.map(Path::to_path_buf),
                line: None,
                message: other.to_string(),
            }),
        }
    }

    fn at(&mut self, file: &Path, line: u64, message: String) {
        self.violations.push(Violation {
            file: Some(file.to_path_buf()),
            line: Some(line),
            message,
        });
    }

    /// `Ok` when clean, otherwise a validation error carrying every violation.
    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(
                self.violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct ZoneRef {
    zone_id: String,
    attach_node: String,
}

#[derive(Deserialize)]
struct DemandRef {
    hour: u8,
    origin_zone: String,
    dest_zone: String,
}

#[derive(Deserialize)]
struct OverlayRef {
    edge_id: String,
    multiplier: f64,
}

/// Checks every parameter range and every cross-file reference, collecting
/// all violations instead of stopping at the first.
pub fn validate(config: &ScenarioConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    report.param(config.bpr.validate());
    report.param(config.modes.validate());
    report.param(config.departure_split.validate());
    report.param(config.solver.validate());
    if config.run.hour > 23 {
        report.param(Err(Error::Validation(vec![format!(
            "run hour {} outside 0-23",
            config.run.hour
        )])));
    }
    if !(config.run.day_scale.is_finite() && config.run.day_scale > 0.0) {
        report.param(Err(Error::Validation(vec![format!(
            "day_scale must be positive, got {}",
            config.run.day_scale
        )])));
    }
    for l in config.scenarios.lambdas.iter().chain(&config.scenarios.sweep) {
        if !(0.0..=1.0).contains(l) {
            report.param(Err(Error::Validation(vec![format!(
                "selfish fraction lambda must be in [0, 1], got {l}"
            )])));
        }
    }
    if let Some(s) = &config.strategy {
        report.param(s.params().validate());
        if s.sweep_top_k.contains(&0) {
            report.param(Err(Error::Validation(vec!["sweep_top_k entries must be at least 1".into()])));
        }
        if !(s.commuter_occupancy.is_finite() && s.commuter_occupancy > 0.0) {
            report.param(Err(Error::Validation(vec![format!(
                "commuter_occupancy must be positive, got {}",
                s.commuter_occupancy
            )])));
        }
        if config.data.lines.is_none() {
            report.param(Err(Error::Validation(vec![
                "strategy block requires a lines file".into()
            ])));
        }
    }
    let event_files = [&config.data.venues, &config.data.sessions, &config.data.residences];
    let present = event_files.iter().filter(|p| p.is_some()).count();
    if present != 0 && present != 3 {
        report.param(Err(Error::Validation(vec![
            "venues, sessions and residences must be given together".into(),
        ])));
    }
    if config.data.has_events() && config.data.lines.is_none() {
        report.param(Err(Error::Validation(vec![
            "event demand needs a lines file for the tourist mode split".into(),
        ])));
    }

    let mut missing = false;
    for (role, path) in config.data.files() {
        if !path.is_file() {
            missing = true;
            report.violations.push(Violation {
                file: Some(path.to_path_buf()),
                line: None,
                message: format!("{role} file does not exist"),
            });
        }
    }
    if missing {
        return report;
    }
    check_files(config, &mut report);
    report
}

fn check_files(config: &ScenarioConfig, report: &mut ValidationReport) {
    let d = &config.data;
    let nodes = match network::load_nodes(&d.nodes) {
        Ok(n) => Some(n),
        Err(e) => {
            report.error(Some(&d.nodes), e);
            None
        }
    };
    let links = match network::load_links(&d.links) {
        Ok(l) => Some(l),
        Err(e) => {
            report.error(Some(&d.links), e);
            None
        }
    };
    let mut edge_ids = BTreeSet::new();
    if let (Some(nodes), Some((links, lanes))) = (&nodes, &links) {
        edge_ids = links.iter().map(|l| l.edge_id.clone()).collect();
        if let Err(e) = network::RoadNetwork::with_lanes(nodes.clone(), links.clone(), config.bpr, lanes.clone()) {
            report.error(Some(&d.links), e);
        }
    }
    let node_ids: HashSet<&str> = nodes.iter().flatten().map(|n| n.node_id.as_str()).collect();

    let mut zone_ids = BTreeSet::new();
    match io::read_rows::<ZoneRef>(&d.zones, &["zone_id", "attach_node"]) {
        Ok(rows) => {
            for (line, z) in rows {
                if !zone_ids.insert(z.zone_id.clone()) {
                    report.at(&d.zones, line, format!("duplicate zone_id `{}`", z.zone_id));
                }
                if nodes.is_some() && !node_ids.contains(z.attach_node.as_str()) {
                    report.at(
                        &d.zones,
                        line,
                        format!("zone `{}` attaches to unknown node `{}`", z.zone_id, z.attach_node),
                    );
                }
            }
        }
        Err(e) => report.error(Some(&d.zones), e),
    }

    match demand::load_demand(&d.demand, config.run.day_scale) {
        Ok(hourly) => {
            if !hourly.contains_key(&config.run.hour) {
                report.violations.push(Violation {
                    file: Some(d.demand.clone()),
                    line: None,
                    message: format!("no demand rows for hour {}", config.run.hour),
                });
            }
            if let Ok(rows) = io::read_rows::<DemandRef>(&d.demand, &["hour", "origin_zone", "dest_zone"]) {
                for (line, r) in rows {
                    for z in [&r.origin_zone, &r.dest_zone] {
                        if !zone_ids.contains(z) {
                            report.at(&d.demand, line, format!("unknown zone `{z}` (hour {})", r.hour));
                        }
                    }
                }
            }
        }
        Err(e) => report.error(Some(&d.demand), e),
    }

    if let Some(p) = &d.overlay {
        match io::read_rows::<OverlayRef>(p, &["edge_id", "multiplier"]) {
            Ok(rows) => {
                let mut seen = HashSet::new();
                for (line, r) in rows {
                    if links.is_some() && !edge_ids.contains(&r.edge_id) {
                        report.at(p, line, format!("overlay names unknown edge `{}`", r.edge_id));
                    }
                    if !(r.multiplier.is_finite() && r.multiplier > 0.0 && r.multiplier <= 1.0) {
                        report.at(
                            p,
                            line,
                            format!("multiplier for `{}` must be in (0, 1], got {}", r.edge_id, r.multiplier),
                        );
                    }
                    if !seen.insert(r.edge_id.clone()) {
                        report.at(p, line, format!("duplicate overlay entry for `{}`", r.edge_id));
                    }
                }
            }
            Err(e) => report.error(Some(p), e),
        }
    }

    if let (Some(vp), Some(sp), Some(rp)) = (&d.venues, &d.sessions, &d.residences) {
        let venues = match demand::load_venues(vp) {
            Ok(v) => v,
            Err(e) => {
                report.error(Some(vp), e);
                Vec::new()
            }
        };
        let capacity: BTreeMap<&str, f64> = venues.iter().map(|v| (v.venue_id.as_str(), v.capacity)).collect();
        match demand::load_sessions_with_lines(sp) {
            Ok(rows) => {
                for (line, s) in rows {
                    match capacity.get(s.venue_id.as_str()) {
                        None => report.at(sp, line, format!("session at unknown venue `{}`", s.venue_id)),
                        Some(&c) if s.expected_attendance > c => report.at(
                            sp,
                            line,
                            format!(
                                "expected attendance {} exceeds capacity {c} of venue `{}`",
                                s.expected_attendance, s.venue_id
                            ),
                        ),
                        Some(_) => {}
                    }
                }
            }
            Err(e) => report.error(Some(sp), e),
        }
        if let Err(e) = demand::load_residences(rp) {
            report.error(Some(rp), e);
        }
    }

    if let Some(p) = &d.lines {
        match strategy::load_lines(p) {
            Ok(lines) => {
                if lines.is_empty() {
                    report.error(Some(p), Error::Validation(vec!["lines file has no stations".into()]));
                }
                if let Err(e) = strategy::TransitNetwork::new(lines) {
                    report.error(Some(p), e);
                }
            }
            Err(e) => report.error(Some(p), e),
        }
    }
}
