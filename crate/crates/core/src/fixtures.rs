//! Small synthetic datasets for tests, benchmarks and demos.
//!
//! * `diamond`: four nodes, two routes, an Olympic lane and one venue.
//! * `braess`: the classic paradox network, one OD pair.
//! * `bottleneck`: several origins sharing one overloaded link next to
//!   origins with spare capacity, all close to transit stations.
//!
//! Coordinates are laid out in kilometres around a fixed reference point.

use std::collections::BTreeSet;
use std::path::Path;

use crate::config::{DataPaths, RunSelection, ScenarioConfig};
use crate::cost::BprParams;
use crate::demand::{
    write_demand, write_residences, write_sessions, write_venues, write_zones, DemandMatrix, EventSession, Residence,
    ResidenceKind, StationPoint, Venue, Zone,
};
use crate::error::Result;
use crate::geo::{haversine_km, km_to_lat_deg};
use crate::network::{write_links, write_nodes, write_overlay, CapacityOverlay, Link, Node, RoadNetwork};
use crate::strategy::{write_lines, LineKind, TransitLine, DEFAULT_SEGMENT_CAPACITY};

const REF_LAT: f64 = -22.9;
const REF_LON: f64 = -43.3;

/// `(lat, lon)` of a point `east_km` east and `north_km` north of the reference.
pub fn place(east_km: f64, north_km: f64) -> (f64, f64) {
    let lat = REF_LAT + km_to_lat_deg(north_km);
    let lon = REF_LON + km_to_lat_deg(east_km) / REF_LAT.to_radians().cos();
    (lat, lon)
}

/// File names used by `Bundle::write`.
pub mod files {
    pub const NODES: &str = "nodes.csv";
    pub const LINKS: &str = "links.csv";
    pub const ZONES: &str = "zones.csv";
    pub const DEMAND: &str = "demand.csv";
    pub const VENUES: &str = "venues.csv";
    pub const SESSIONS: &str = "sessions.csv";
    pub const RESIDENCES: &str = "residences.csv";
    pub const LINES: &str = "lines.csv";
    pub const OVERLAY: &str = "overlay.csv";
}

/// Everything a scenario run reads.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    /// Edges flagged as Olympic lanes in the links file.
    pub lanes: BTreeSet<String>,
    pub zones: Vec<Zone>,
    pub demand: Vec<DemandMatrix>,
    pub venues: Vec<Venue>,
    pub sessions: Vec<EventSession>,
    pub residences: Vec<Residence>,
    pub lines: Vec<TransitLine>,
    /// Explicit capacity overlay on top of the flagged lanes.
    pub overlay: CapacityOverlay,
    pub hour: u8,
    pub date: String,
}

impl Bundle {
    pub fn network(&self) -> RoadNetwork {
        RoadNetwork::with_lanes(
            self.nodes.clone(),
            self.links.clone(),
            BprParams::default(),
            self.lanes.clone(),
        )
        .expect("fixture network is valid")
    }

    /// Demand of the bundle's study hour.
    pub fn hour_demand(&self) -> &DemandMatrix {
        self.demand
            .iter()
            .find(|d| d.hour == self.hour)
            .expect("fixture has demand for its hour")
    }

    pub fn stations(&self) -> Vec<StationPoint> {
        let mut seen = BTreeSet::new();
        self.lines
            .iter()
            .flat_map(|l| l.stations.iter())
            .filter(|s| seen.insert(s.station_id.clone()))
            .cloned()
            .collect()
    }

    /// Writes every table into `dir` under the names in [`files`].
    pub fn write(&self, dir: &Path) -> Result<()> {
        let network = self.network();
        write_nodes(&dir.join(files::NODES), &self.nodes)?;
        write_links(&dir.join(files::LINKS), &network)?;
        write_zones(&dir.join(files::ZONES), &self.zones)?;
        write_demand(&dir.join(files::DEMAND), &self.demand)?;
        write_venues(&dir.join(files::VENUES), &self.venues)?;
        write_sessions(&dir.join(files::SESSIONS), &self.sessions)?;
        write_residences(&dir.join(files::RESIDENCES), &self.residences)?;
        write_lines(&dir.join(files::LINES), &self.lines)?;
        write_overlay(&dir.join(files::OVERLAY), &self.overlay)?;
        Ok(())
    }

    /// Writes the tables into `dir` and returns a config reading them with
    /// default parameters. Empty optional tables are left out.
    pub fn config(&self, dir: &Path) -> Result<ScenarioConfig> {
        self.write(dir)?;
        let opt = |present: bool, name: &str| present.then(|| dir.join(name));
        let events = !self.venues.is_empty();
        Ok(ScenarioConfig {
            data: DataPaths {
                nodes: dir.join(files::NODES),
                links: dir.join(files::LINKS),
                zones: dir.join(files::ZONES),
                demand: dir.join(files::DEMAND),
                venues: opt(events, files::VENUES),
                sessions: opt(events, files::SESSIONS),
                residences: opt(events, files::RESIDENCES),
                lines: opt(!self.lines.is_empty(), files::LINES),
                overlay: opt(!self.overlay.is_empty(), files::OVERLAY),
            },
            run: RunSelection {
                hour: self.hour,
                date: self.date.clone(),
                day_scale: 1.0,
            },
            bpr: BprParams::default(),
            modes: Default::default(),
            departure_split: Default::default(),
            solver: Default::default(),
            scenarios: Default::default(),
            strategy: None,
        })
    }
}

fn node(id: &str, east: f64, north: f64) -> Node {
    let (lat, lon) = place(east, north);
    Node {
        node_id: id.to_string(),
        lat,
        lon,
    }
}

/// Link whose length is the rounded chord between its end nodes.
fn link(nodes: &[Node], id: &str, from: &str, to: &str, freeflow: f64, capacity: f64) -> Link {
    let find = |n: &str| nodes.iter().find(|x| x.node_id == n).expect("fixture node");
    let (a, b) = (find(from), find(to));
    let length = (haversine_km(a.lat, a.lon, b.lat, b.lon) * 1000.0).round().max(1.0);
    Link {
        edge_id: id.to_string(),
        from: from.to_string(),
        to: to.to_string(),
        length,
        capacity,
        freeflow_time: freeflow,
    }
}

fn zone_at(nodes: &[Node], zone_id: &str, node_id: &str) -> Zone {
    let n = nodes.iter().find(|x| x.node_id == node_id).expect("fixture node");
    Zone {
        zone_id: zone_id.to_string(),
        lat: n.lat,
        lon: n.lon,
        attach_node: node_id.to_string(),
    }
}

fn station(id: &str, at: (f64, f64)) -> StationPoint {
    StationPoint {
        station_id: id.to_string(),
        lat: at.0,
        lon: at.1,
    }
}

fn line(id: &str, kind: LineKind, stations: Vec<StationPoint>) -> TransitLine {
    TransitLine {
        line_id: id.to_string(),
        kind,
        stations,
        segment_capacity: DEFAULT_SEGMENT_CAPACITY,
    }
}

/// Commuter-only demand: persons 1.2 per vehicle, every vehicle a commuter.
fn commute(hour: u8, rows: &[(&str, &str, f64)]) -> DemandMatrix {
    rows.iter().fold(DemandMatrix::new(hour), |m, (o, d, v)| m.with(o, d, *v, v * 1.2, *v))
}

fn empty_events() -> (Vec<Venue>, Vec<EventSession>, Vec<Residence>) {
    (Vec::new(), Vec::new(), Vec::new())
}

/// Diamond A -> {B, C} -> D. The B -> D link is an Olympic lane; a venue
/// near D draws spectators from hotels near A and B (by taxi) and near C
/// (by transit).
pub fn diamond() -> Bundle {
    let nodes = vec![
        node("A", 0.0, 0.0),
        node("B", 4.0, 3.0),
        node("C", 4.0, -3.0),
        node("D", 8.0, 0.0),
    ];
    let links = vec![
        link(&nodes, "ab", "A", "B", 4.0, 1000.0),
        link(&nodes, "ac", "A", "C", 6.0, 1500.0),
        link(&nodes, "bd", "B", "D", 5.0, 1000.0),
        link(&nodes, "cd", "C", "D", 4.0, 1500.0),
    ];
    let zones = vec![
        zone_at(&nodes, "ZA", "A"),
        zone_at(&nodes, "ZB", "B"),
        zone_at(&nodes, "ZC", "C"),
        zone_at(&nodes, "ZD", "D"),
    ];
    let rows = [
        ("ZA", "ZD", 1500.0),
        ("ZA", "ZB", 200.0),
        ("ZA", "ZC", 200.0),
        ("ZB", "ZD", 300.0),
        ("ZC", "ZD", 200.0),
    ];
    let off_peak: Vec<_> = rows.iter().map(|(o, d, v)| (*o, *d, v * 0.5)).collect();
    let demand = vec![commute(8, &rows), commute(9, &off_peak)];

    let venue_at = place(8.3, 0.0);
    let venues = vec![Venue {
        venue_id: "V1".into(),
        lat: venue_at.0,
        lon: venue_at.1,
        capacity: 5000.0,
    }];
    let sessions = vec![EventSession {
        venue_id: "V1".into(),
        date: "2016-08-10".into(),
        start_hour: 10,
        expected_attendance: 2500.0,
    }];
    let res = |id: &str, at: (f64, f64), cap: f64, kind| Residence {
        residence_id: id.into(),
        lat: at.0,
        lon: at.1,
        accommodates: cap,
        kind,
    };
    let residences = vec![
        res("R1", place(0.0, 2.3), 300.0, ResidenceKind::Hotel),
        res("R2", place(4.0, 3.5), 100.0, ResidenceKind::Airbnb),
        res("R3", place(4.5, -3.0), 100.0, ResidenceKind::Airbnb),
    ];
    let lines = vec![line(
        "L1",
        LineKind::Metro,
        vec![
            station("SA", place(0.0, 0.0)),
            station("SC", place(4.0, -3.0)),
            station("SD", place(8.0, 0.0)),
        ],
    )];
    Bundle {
        nodes,
        links,
        lanes: BTreeSet::from(["bd".to_string()]),
        zones,
        demand,
        venues,
        sessions,
        residences,
        lines,
        overlay: CapacityOverlay::new(),
        hour: 8,
        date: "2016-08-10".into(),
    }
}

/// Braess network S -> {A, B} -> T with the crossing link A -> B. With the
/// default cost curve every one of the three routes carries flow both at
/// user equilibrium and at the system optimum, and the two differ.
pub fn braess() -> Bundle {
    let nodes = vec![
        node("S", 0.0, 0.0),
        node("A", 3.0, 3.0),
        node("B", 3.0, -3.0),
        node("T", 6.0, 0.0),
    ];
    let links = vec![
        link(&nodes, "sa", "S", "A", 10.0, 100.0),
        link(&nodes, "at", "A", "T", 30.0, 200.0),
        link(&nodes, "sb", "S", "B", 30.0, 200.0),
        link(&nodes, "bt", "B", "T", 10.0, 100.0),
        link(&nodes, "ab", "A", "B", 2.0, 100.0),
    ];
    let zones = vec![zone_at(&nodes, "ZS", "S"), zone_at(&nodes, "ZT", "T")];
    let (venues, sessions, residences) = empty_events();
    Bundle {
        nodes,
        links,
        lanes: BTreeSet::new(),
        zones,
        demand: vec![commute(8, &[("ZS", "ZT", 200.0)])],
        venues,
        sessions,
        residences,
        lines: Vec::new(),
        overlay: CapacityOverlay::new(),
        hour: 8,
        date: "2016-08-10".into(),
    }
}

/// Origins O1-O3 and O6 feed one bottleneck link M -> D; O4 and O5 reach D
/// through two parallel uncongested links. Every zone except O6 sits on a
/// transit station.
pub fn bottleneck() -> Bundle {
    let nodes = vec![
        node("O1", 0.0, 2.0),
        node("O2", 0.0, 0.0),
        node("O3", 0.0, -2.0),
        node("O4", 2.0, 6.0),
        node("O5", 2.0, 9.0),
        node("O6", -8.0, -8.0),
        node("M", 6.0, 0.0),
        node("H", 6.0, 6.0),
        node("D", 10.0, 0.0),
    ];
    let links = vec![
        link(&nodes, "o1m", "O1", "M", 5.0, 2000.0),
        link(&nodes, "o2m", "O2", "M", 5.0, 2000.0),
        link(&nodes, "o3m", "O3", "M", 5.0, 2000.0),
        link(&nodes, "o6m", "O6", "M", 5.0, 2000.0),
        link(&nodes, "md", "M", "D", 10.0, 1000.0),
        link(&nodes, "o4h", "O4", "H", 5.0, 3000.0),
        link(&nodes, "o5h", "O5", "H", 5.0, 3000.0),
        link(&nodes, "hd1", "H", "D", 10.0, 2000.0),
        link(&nodes, "hd2", "H", "D", 10.0, 2000.0),
    ];
    let zones: Vec<Zone> = ["O1", "O2", "O3", "O4", "O5", "O6", "D"]
        .iter()
        .map(|n| zone_at(&nodes, &format!("Z{n}"), n))
        .collect();
    let demand = commute(
        8,
        &[
            ("ZO1", "ZD", 500.0),
            ("ZO2", "ZD", 400.0),
            ("ZO3", "ZD", 300.0),
            ("ZO6", "ZD", 300.0),
            ("ZO4", "ZD", 1500.0),
            ("ZO5", "ZD", 1500.0),
        ],
    );
    let at = |n: &str| {
        let x = nodes.iter().find(|x| x.node_id == n).unwrap();
        (x.lat, x.lon)
    };
    let lines = vec![
        line(
            "L1",
            LineKind::Metro,
            vec![
                station("S1", at("O1")),
                station("S2", at("O2")),
                station("S3", at("O3")),
                station("SD", at("D")),
            ],
        ),
        line(
            "L2",
            LineKind::Brt,
            vec![station("S5", at("O5")), station("S4", at("O4")), station("SD", at("D"))],
        ),
    ];
    let (venues, sessions, residences) = empty_events();
    Bundle {
        nodes,
        links,
        lanes: BTreeSet::new(),
        zones,
        demand: vec![demand],
        venues,
        sessions,
        residences,
        lines,
        overlay: CapacityOverlay::new(),
        hour: 8,
        date: "2016-08-10".into(),
    }
}

/// Two parallel links between one origin and one destination zone.
pub fn parallel(first: (f64, f64), second: (f64, f64), demand: f64) -> Bundle {
    let nodes = vec![node("O", 0.0, 0.0), node("D", 5.0, 0.0)];
    let links = vec![
        link(&nodes, "a", "O", "D", first.0, first.1),
        link(&nodes, "b", "O", "D", second.0, second.1),
    ];
    let zones = vec![zone_at(&nodes, "ZO", "O"), zone_at(&nodes, "ZD", "D")];
    let (venues, sessions, residences) = empty_events();
    Bundle {
        nodes,
        links,
        lanes: BTreeSet::new(),
        zones,
        demand: vec![commute(8, &[("ZO", "ZD", demand)])],
        venues,
        sessions,
        residences,
        lines: Vec::new(),
        overlay: CapacityOverlay::new(),
        hour: 8,
        date: "2016-08-10".into(),
    }
}
