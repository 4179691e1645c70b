//! Rapid-transit lines and station-to-station ridership routing.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::StationPoint;
use crate::error::{Error, Result};
use crate::io;

/// Persons per hour per direction a metro or BRT segment carries.
pub const DEFAULT_SEGMENT_CAPACITY: f64 = 30_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Metro,
    Brt,
}

impl LineKind {
    fn as_str(self) -> &'static str {
        match self {
            LineKind::Metro => "metro",
            LineKind::Brt => "brt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitLine {
    pub line_id: String,
    pub kind: LineKind,
    /// In running order.
    pub stations: Vec<StationPoint>,
    pub segment_capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Along increasing station sequence.
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// Directed segment between two consecutive stations of a line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub line_id: String,
    pub from_station: String,
    pub to_station: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDelta {
    pub segment: Segment,
    pub delta_persons: f64,
    pub capacity: f64,
    pub over_capacity: bool,
}

/// Station graph of all lines; transfers happen at shared station ids.
#[derive(Debug, Clone)]
pub struct TransitNetwork {
    lines: Vec<TransitLine>,
    /// station -> (neighbour, segment) sorted by (neighbour, line).
    adjacency: BTreeMap<String, Vec<(String, Segment)>>,
    capacity: BTreeMap<String, f64>,
}

impl TransitNetwork {
    pub fn new(lines: Vec<TransitLine>) -> Result<Self> {
        let mut errs = Vec::new();
        let mut ids = BTreeSet::new();
        for l in &lines {
            if !ids.insert(l.line_id.clone()) {
                errs.push(format!("duplicate line `{}`", l.line_id));
            }
            if l.stations.len() < 2 {
                errs.push(format!("line `{}` needs at least two stations", l.line_id));
            }
            for w in l.stations.windows(2) {
                if w[0].station_id == w[1].station_id {
                    errs.push(format!(
                        "line `{}` repeats station `{}` consecutively",
                        l.line_id, w[0].station_id
                    ));
                }
            }
            if !(l.segment_capacity.is_finite() && l.segment_capacity > 0.0) {
                errs.push(format!("line `{}` segment capacity must be > 0", l.line_id));
            }
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        let mut adjacency: BTreeMap<String, Vec<(String, Segment)>> = BTreeMap::new();
        for l in &lines {
            for w in l.stations.windows(2) {
                let (a, b) = (&w[0].station_id, &w[1].station_id);
                for (from, to, direction) in [(a, b, Direction::Forward), (b, a, Direction::Backward)] {
                    adjacency.entry(from.clone()).or_default().push((
                        to.clone(),
                        Segment {
                            line_id: l.line_id.clone(),
                            from_station: from.clone(),
                            to_station: to.clone(),
                            direction,
                        },
                    ));
                }
            }
        }
        for v in adjacency.values_mut() {
            v.sort_by(|x, y| (&x.0, &x.1.line_id).cmp(&(&y.0, &y.1.line_id)));
        }
        let capacity = lines
            .iter()
            .map(|l| (l.line_id.clone(), l.segment_capacity))
            .collect();
        Ok(TransitNetwork {
            lines,
            adjacency,
            capacity,
        })
    }

    pub fn lines(&self) -> &[TransitLine] {
        &self.lines
    }

    /// Distinct stations, first occurrence wins for coordinates.
    pub fn stations(&self) -> Vec<StationPoint> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for l in &self.lines {
            for s in &l.stations {
                if seen.insert(s.station_id.clone()) {
                    out.push(s.clone());
                }
            }
        }
        out
    }

    /// Fewest-hop segment sequence between two stations. Ties resolve to the
    /// first route found when neighbours are visited in (station, line) order.
    pub fn route(&self, from: &str, to: &str) -> Result<Vec<Segment>> {
        let no_route = || Error::NoPath {
            origin: format!("station {from}"),
            dest: format!("station {to}"),
        };
        if !self.adjacency.contains_key(from) || !self.adjacency.contains_key(to) {
            return Err(no_route());
        }
        if from == to {
            return Ok(Vec::new());
        }
        let mut parent: BTreeMap<&str, &Segment> = BTreeMap::new();
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            if s == to {
                break;
            }
            for (next, seg) in &self.adjacency[s] {
                if seen.insert(next.as_str()) {
                    parent.insert(next.as_str(), seg);
                    queue.push_back(next.as_str());
                }
            }
        }
        if !seen.contains(to) {
            return Err(no_route());
        }
        let mut out = Vec::new();
        let mut cur = to;
        while cur != from {
            let seg = parent[cur];
            out.push(seg.clone());
            cur = seg.from_station.as_str();
        }
        out.reverse();
        Ok(out)
    }

    /// Routes station-to-station person flows and sums them per directed
    /// segment, flagging segments above their line's capacity.
    pub fn load(&self, trips: &[(String, String, f64)]) -> Result<Vec<SegmentDelta>> {
        let mut sums: BTreeMap<Segment, f64> = BTreeMap::new();
        for (from, to, persons) in trips {
            if *persons <= 0.0 {
                continue;
            }
            for seg in self.route(from, to)? {
                *sums.entry(seg).or_insert(0.0) += persons;
            }
        }
        Ok(sums
            .into_iter()
            .map(|(segment, delta)| {
                let capacity = self.capacity[&segment.line_id];
                SegmentDelta {
                    over_capacity: delta > capacity,
                    segment,
                    delta_persons: delta,
                    capacity,
                }
            })
            .collect())
    }
}

#[derive(Deserialize)]
struct LineRow {
    line_id: String,
    kind: LineKind,
    seq: u32,
    station_id: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    segment_capacity: Option<f64>,
}

/// Kind, numbered stations and capacity of one line while it is read.
type LineParts = (LineKind, Vec<(u32, StationPoint)>, Option<f64>);

pub fn load_lines(path: &Path) -> Result<Vec<TransitLine>> {
    let rows = io::read_rows::<LineRow>(path, &["line_id", "kind", "seq", "station_id", "lat", "lon"])?;
    let mut grouped: BTreeMap<String, LineParts> = BTreeMap::new();
    for (line, r) in rows {
        let entry = grouped
            .entry(r.line_id.clone())
            .or_insert_with(|| (r.kind, Vec::new(), None));
        if entry.0 != r.kind {
            return Err(Error::format(path, format!("line {line}: kind changes within `{}`", r.line_id)));
        }
        if let Some(c) = r.segment_capacity {
            match entry.2 {
                Some(prev) if prev != c => {
                    return Err(Error::format(
                        path,
                        format!("line {line}: conflicting segment_capacity for `{}`", r.line_id),
                    ))
                }
                _ => entry.2 = Some(c),
            }
        }
        entry.1.push((
            r.seq,
            StationPoint {
                station_id: r.station_id,
                lat: r.lat,
                lon: r.lon,
            },
        ));
    }
    let mut out = Vec::with_capacity(grouped.len());
    for (line_id, (kind, mut stations, cap)) in grouped {
        stations.sort_by_key(|(seq, _)| *seq);
        if stations.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::format(path, format!("duplicate seq within line `{line_id}`")));
        }
        out.push(TransitLine {
            line_id,
            kind,
            stations: stations.into_iter().map(|(_, s)| s).collect(),
            segment_capacity: cap.unwrap_or(DEFAULT_SEGMENT_CAPACITY),
        });
    }
    Ok(out)
}

pub fn write_lines(path: &Path, lines: &[TransitLine]) -> Result<()> {
    let mut w = io::writer(path)?;
    io::write_record(
        path,
        &mut w,
        ["line_id", "kind", "seq", "station_id", "lat", "lon", "segment_capacity"],
    )?;
    for l in lines {
        for (i, s) in l.stations.iter().enumerate() {
            io::write_record(
                path,
                &mut w,
                [
                    l.line_id.clone(),
                    l.kind.as_str().to_string(),
                    (i + 1).to_string(),
                    s.station_id.clone(),
                    s.lat.to_string(),
                    s.lon.to_string(),
                    l.segment_capacity.to_string(),
                ],
            )?;
        }
    }
    io::flush(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(id: &str) -> StationPoint {
        StationPoint {
            station_id: id.into(),
            lat: 0.0,
            lon: 0.0,
        }
    }

    fn line(id: &str, stations: &[&str]) -> TransitLine {
        TransitLine {
            line_id: id.into(),
            kind: LineKind::Metro,
            stations: stations.iter().map(|s| st(s)).collect(),
            segment_capacity: DEFAULT_SEGMENT_CAPACITY,
        }
    }

    #[test]
    fn single_line_both_directions() {
        let net = TransitNetwork::new(vec![line("L1", &["A", "B", "C"])]).unwrap();
        let d = net.load(&[("A".into(), "C".into(), 100.0)]).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|s| s.segment.direction == Direction::Forward && s.delta_persons == 100.0));
        assert_eq!(d[0].segment.from_station, "A");
        assert_eq!(d[1].segment.to_station, "C");

        let d = net.load(&[("C".into(), "A".into(), 100.0)]).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|s| s.segment.direction == Direction::Backward));
    }

    #[test]
    fn transfer_between_lines() {
        let net = TransitNetwork::new(vec![line("L1", &["A", "B"]), line("L2", &["B", "C"])]).unwrap();
        let r = net.route("A", "C").unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].line_id, "L1");
        assert_eq!(r[1].line_id, "L2");
    }

    #[test]
    fn over_capacity_flag() {
        let net = TransitNetwork::new(vec![line("L1", &["A", "B"])]).unwrap();
        let d = net.load(&[("A".into(), "B".into(), 31_000.0)]).unwrap();
        assert!(d[0].over_capacity);
        let d = net.load(&[("A".into(), "B".into(), 30_000.0)]).unwrap();
        assert!(!d[0].over_capacity);
    }

    #[test]
    fn disconnected_stations_named() {
        let net = TransitNetwork::new(vec![line("L1", &["A", "B"]), line("L2", &["C", "D"])]).unwrap();
        let msg = net.route("A", "D").unwrap_err().to_string();
        assert!(msg.contains("station A") && msg.contains("station D"), "{msg}");
    }

    #[test]
    fn rejects_degenerate_lines() {
        assert!(TransitNetwork::new(vec![line("L1", &["A"])]).is_err());
        assert!(TransitNetwork::new(vec![line("L1", &["A", "A"])]).is_err());
    }
}
