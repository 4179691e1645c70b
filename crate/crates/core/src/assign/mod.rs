//! Static traffic assignment under the behavioural scenarios.
//!
//! * baseline / selfish: user equilibrium (Frank-Wolfe on the Beckmann objective)
//! * altruism: system optimum (the same iteration on marginal link costs)
//! * habit: pre-event routes frozen, tourists routed on pre-event times
//! * mixed: a fraction `lambda` re-equilibrates on top of the remaining habit flow

mod scenarios;
mod solver;

pub use solver::Assigner;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::demand::OdPair;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Scenario {
    Baseline,
    Habit,
    Selfish,
    Altruism,
    Mixed { lambda: f64 },
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Baseline => f.write_str("baseline"),
            Scenario::Habit => f.write_str("habit"),
            Scenario::Selfish => f.write_str("selfish"),
            Scenario::Altruism => f.write_str("altruism"),
            Scenario::Mixed { lambda } => write!(f, "mixed_{lambda}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_gap")]
    pub relative_gap_tol: f64,
    #[serde(default = "default_line_search")]
    pub line_search_tol: f64,
}

fn default_max_iterations() -> usize {
    200
}
fn default_gap() -> f64 {
    1e-4
}
fn default_line_search() -> f64 {
    1e-8
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: default_max_iterations(),
            relative_gap_tol: default_gap(),
            line_search_tol: default_line_search(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.max_iterations == 0 {
            errs.push("max_iterations must be positive".to_string());
        }
        if !(self.relative_gap_tol > 0.0 && self.relative_gap_tol.is_finite()) {
            errs.push(format!("relative_gap_tol must be positive, got {}", self.relative_gap_tol));
        }
        if !(self.line_search_tol > 0.0 && self.line_search_tol.is_finite()) {
            errs.push(format!("line_search_tol must be positive, got {}", self.line_search_tol));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Flow on one route of one OD pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFlow {
    pub origin: String,
    pub dest: String,
    pub path: Vec<String>,
    pub flow: f64,
}

/// State of one link after assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkFlow {
    pub edge_id: String,
    pub volume: f64,
    /// Minutes, evaluated at `volume` and `capacity`.
    pub time: f64,
    /// Effective capacity the scenario ran with.
    pub capacity: f64,
}

impl LinkFlow {
    pub fn voc(&self) -> f64 {
        self.volume / self.capacity
    }
}

/// Travel time and vehicle flow of one OD pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdTime {
    pub origin: String,
    pub dest: String,
    /// Minutes.
    pub time: f64,
    /// Vehicles per hour.
    pub flow: f64,
}

impl OdTime {
    pub fn pair(&self) -> OdPair {
        OdPair::new(self.origin.clone(), self.dest.clone())
    }
}

/// Outcome of one scenario-hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    pub scenario: Scenario,
    /// In network link order.
    pub links: Vec<LinkFlow>,
    /// Sorted by (origin, dest, path).
    pub paths: Vec<PathFlow>,
    /// Sorted by (origin, dest).
    pub od_times: Vec<OdTime>,
    pub relative_gap: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each iteration (equilibrium solvers only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective: Vec<f64>,
}

impl AssignmentResult {
    pub fn volumes(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.volume).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.time).collect()
    }

    pub fn link(&self, edge_id: &str) -> Option<&LinkFlow> {
        self.links.iter().find(|l| l.edge_id == edge_id)
    }

    pub fn volume(&self, edge_id: &str) -> Option<f64> {
        self.link(edge_id).map(|l| l.volume)
    }

    pub fn od_time(&self, od: &OdPair) -> Option<&OdTime> {
        self.od_times
            .binary_search_by(|t| (t.origin.as_str(), t.dest.as_str()).cmp(&(od.origin.as_str(), od.dest.as_str())))
            .ok()
            .map(|i| &self.od_times[i])
    }

    pub fn od_time_map(&self) -> BTreeMap<OdPair, f64> {
        self.od_times.iter().map(|t| (t.pair(), t.time)).collect()
    }

    /// Paths of one OD pair.
    pub fn paths_of(&self, od: &OdPair) -> impl Iterator<Item = &PathFlow> + '_ {
        let od = od.clone();
        self.paths
            .iter()
            .filter(move |p| p.origin == od.origin && p.dest == od.dest)
    }

    /// Collective travel time `sum v_e t_e` in vehicle-minutes.
    pub fn total_time(&self) -> f64 {
        self.links.iter().map(|l| l.volume * l.time).sum()
    }

    /// Time of a path at this result's link times.
    pub fn path_time(&self, path: &[String]) -> Result<f64> {
        let idx: BTreeMap<&str, f64> = self.links.iter().map(|l| (l.edge_id.as_str(), l.time)).collect();
        path.iter()
            .map(|e| {
                idx.get(e.as_str()).copied().ok_or_else(|| Error::NotFound {
                    kind: "edge",
                    id: e.clone(),
                })
            })
            .sum()
    }
}
