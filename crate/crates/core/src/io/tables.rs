use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::assign::AssignmentResult;
use crate::error::{Error, Result};
use crate::strategy::{Reduction, SegmentDelta};

/// Separator between edge ids in the path column.
pub const PATH_SEPARATOR: char = '|';

/// A result table with a fixed column order.
pub trait Table: Serialize + DeserializeOwned {
    const HEADERS: &'static [&'static str];
}

/// Writes a header line followed by `rows`; an empty slice gives a
/// header-only file.
pub fn write_table<T: Table>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(std::io::BufWriter::new(f));
    super::write_record(path, &mut w, T::HEADERS)?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    super::flush(path, w)
}

pub fn read_table<T: Table>(path: &Path) -> Result<Vec<T>> {
    Ok(super::read_rows::<T>(path, T::HEADERS)?
        .into_iter()
        .map(|(_, r)| r)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRow {
    pub edge_id: String,
    pub volume: f64,
    pub time_min: f64,
    pub voc: f64,
}

impl Table for LinkRow {
    const HEADERS: &'static [&'static str] = &["edge_id", "volume", "time_min", "voc"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdRow {
    pub origin: String,
    pub dest: String,
    pub time_min: f64,
    pub flow: f64,
}

impl Table for OdRow {
    const HEADERS: &'static [&'static str] = &["origin", "dest", "time_min", "flow"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub origin: String,
    pub dest: String,
    /// Edge ids joined by `PATH_SEPARATOR`.
    pub path: String,
    pub flow: f64,
}

impl Table for PathRow {
    const HEADERS: &'static [&'static str] = &["origin", "dest", "path", "flow"];
}

impl PathRow {
    pub fn edges(&self) -> Vec<String> {
        if self.path.is_empty() {
            Vec::new()
        } else {
            self.path.split(PATH_SEPARATOR).map(str::to_string).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub origin: String,
    pub dest: String,
    pub removed_vph: f64,
    pub mc_p_min: f64,
}

impl Table for ReductionRow {
    const HEADERS: &'static [&'static str] = &["origin", "dest", "removed_vph", "mc_p_min"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub line_id: String,
    pub from_station: String,
    pub to_station: String,
    pub direction: String,
    pub delta_persons: f64,
    pub over_capacity: bool,
}

impl Table for SegmentRow {
    const HEADERS: &'static [&'static str] = &[
        "line_id",
        "from_station",
        "to_station",
        "direction",
        "delta_persons",
        "over_capacity",
    ];
}

/// One point of the selfish-fraction sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub commuter_increment_pct: f64,
    pub collective_time: f64,
    pub converged: bool,
}

impl Table for LambdaRow {
    const HEADERS: &'static [&'static str] = &["lambda", "commuter_increment_pct", "collective_time", "converged"];
}

/// One point of the strategy sweep over `top_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKRow {
    pub radius_km: f64,
    pub top_k: usize,
    pub mode: String,
    pub removed_vph: f64,
    pub demand_removed_pct: f64,
    pub saving_pct: f64,
    pub converged: bool,
}

impl Table for TopKRow {
    const HEADERS: &'static [&'static str] = &[
        "radius_km",
        "top_k",
        "mode",
        "removed_vph",
        "demand_removed_pct",
        "saving_pct",
        "converged",
    ];
}

pub fn link_rows(result: &AssignmentResult) -> Vec<LinkRow> {
    result
        .links
        .iter()
        .map(|l| LinkRow {
            edge_id: l.edge_id.clone(),
            volume: l.volume,
            time_min: l.time,
            voc: l.voc(),
        })
        .collect()
}

pub fn od_rows(result: &AssignmentResult) -> Vec<OdRow> {
    result
        .od_times
        .iter()
        .map(|t| OdRow {
            origin: t.origin.clone(),
            dest: t.dest.clone(),
            time_min: t.time,
            flow: t.flow,
        })
        .collect()
}

pub fn path_rows(result: &AssignmentResult) -> Vec<PathRow> {
    result
        .paths
        .iter()
        .map(|p| PathRow {
            origin: p.origin.clone(),
            dest: p.dest.clone(),
            path: p.path.join(&PATH_SEPARATOR.to_string()),
            flow: p.flow,
        })
        .collect()
}

pub fn reduction_rows(reductions: &[Reduction]) -> Vec<ReductionRow> {
    reductions
        .iter()
        .map(|r| ReductionRow {
            origin: r.origin.clone(),
            dest: r.dest.clone(),
            removed_vph: r.removed,
            mc_p_min: r.mc_p,
        })
        .collect()
}

pub fn segment_rows(deltas: &[SegmentDelta]) -> Vec<SegmentRow> {
    deltas
        .iter()
        .map(|d| SegmentRow {
            line_id: d.segment.line_id.clone(),
            from_station: d.segment.from_station.clone(),
            to_station: d.segment.to_station.clone(),
            direction: d.segment.direction.as_str().to_string(),
            delta_persons: d.delta_persons,
            over_capacity: d.over_capacity,
        })
        .collect()
}
