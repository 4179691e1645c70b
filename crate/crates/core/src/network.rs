//! Road network: nodes, capacitated links and capacity overlays.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::BprParams;
use crate::error::{Error, Result};

/// Multiplier applied to a flagged Olympic-lane link when no explicit
/// overlay value is given: one of two lanes reserved.
pub const DEFAULT_LANE_MULTIPLIER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub node_id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub edge_id: String,
    pub from: String,
    pub to: String,
    /// Meters.
    pub length: f64,
    /// Vehicles per hour.
    pub capacity: f64,
    /// Minutes.
    pub freeflow_time: f64,
}

/// Per-link capacity multipliers in `(0, 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapacityOverlay {
    pub entries: BTreeMap<String, f64>,
}

impl CapacityOverlay {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, edge_id: impl Into<String>, multiplier: f64) -> Self {
        self.entries.insert(edge_id.into(), multiplier);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries of `other` win on conflicts.
    pub fn merged(&self, other: &CapacityOverlay) -> CapacityOverlay {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|(k, v)| (k.clone(), *v)));
        CapacityOverlay { entries }
    }
}

/// Immutable directed road graph.
///
/// Links are stored in load order; `rank` gives each link its position in
/// lexicographic `edge_id` order, which the shortest-path search uses to break
/// ties deterministically.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    links: Vec<Link>,
    params: BprParams,
    olympic_lanes: BTreeSet<String>,
    node_index: HashMap<String, usize>,
    link_index: HashMap<String, usize>,
    tails: Vec<usize>,
    heads: Vec<usize>,
    outgoing: Vec<Vec<usize>>,
    rank: Vec<u32>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<Node>, links: Vec<Link>, params: BprParams) -> Result<Self> {
        Self::with_lanes(nodes, links, params, BTreeSet::new())
    }

    pub fn with_lanes(
        nodes: Vec<Node>,
        links: Vec<Link>,
        params: BprParams,
        olympic_lanes: BTreeSet<String>,
    ) -> Result<Self> {
        params.validate()?;
        let mut errs = Vec::new();
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.node_id.clone(), i).is_some() {
                errs.push(format!("duplicate node_id `{}`", n.node_id));
            }
            if !(-90.0..=90.0).contains(&n.lat) || !(-180.0..=180.0).contains(&n.lon) {
                errs.push(format!(
                    "node `{}` has coordinates out of range ({}, {})",
                    n.node_id, n.lat, n.lon
                ));
            }
        }
        if links.is_empty() {
            errs.push("network has no links".to_string());
        }
        let mut link_index = HashMap::with_capacity(links.len());
        let mut tails = Vec::with_capacity(links.len());
        let mut heads = Vec::with_capacity(links.len());
        for (i, l) in links.iter().enumerate() {
            if link_index.insert(l.edge_id.clone(), i).is_some() {
                errs.push(format!("duplicate edge_id `{}`", l.edge_id));
            }
            let (from, to) = (node_index.get(&l.from), node_index.get(&l.to));
            if from.is_none() {
                errs.push(format!("link `{}` references unknown node `{}`", l.edge_id, l.from));
            }
            if to.is_none() {
                errs.push(format!("link `{}` references unknown node `{}`", l.edge_id, l.to));
            }
            tails.push(from.copied().unwrap_or(0));
            heads.push(to.copied().unwrap_or(0));
            if !(l.capacity.is_finite() && l.capacity > 0.0) {
                errs.push(format!("link `{}` capacity must be > 0", l.edge_id));
            }
            if !(l.freeflow_time.is_finite() && l.freeflow_time > 0.0) {
                errs.push(format!("link `{}` free-flow time must be > 0", l.edge_id));
            }
            if !(l.length.is_finite() && l.length > 0.0) {
                errs.push(format!("link `{}` length must be > 0", l.edge_id));
            }
        }
        for lane in &olympic_lanes {
            if !link_index.contains_key(lane) {
                errs.push(format!("olympic lane flag on unknown edge `{lane}`"));
            }
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }

        let mut order: Vec<usize> = (0..links.len()).collect();
        order.sort_by(|&a, &b| links[a].edge_id.cmp(&links[b].edge_id));
        let mut rank = vec![0u32; links.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r as u32;
        }
        let mut outgoing = vec![Vec::new(); nodes.len()];
        for &i in &order {
            outgoing[tails[i]].push(i);
        }

        Ok(RoadNetwork {
            nodes,
            links,
            params,
            olympic_lanes,
            node_index,
            link_index,
            tails,
            heads,
            outgoing,
            rank,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, idx: usize) -> &Link {
        &self.links[idx]
    }

    pub fn params(&self) -> &BprParams {
        &self.params
    }

    pub fn olympic_lanes(&self) -> &BTreeSet<String> {
        &self.olympic_lanes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node_idx(&self, node_id: &str) -> Option<usize> {
        self.node_index.get(node_id).copied()
    }

    pub fn link_idx(&self, edge_id: &str) -> Option<usize> {
        self.link_index.get(edge_id).copied()
    }

    pub fn tail(&self, link: usize) -> usize {
        self.tails[link]
    }

    pub fn head(&self, link: usize) -> usize {
        self.heads[link]
    }

    /// Outgoing link indices of `node`, in lexicographic edge_id order.
    pub fn outgoing(&self, node: usize) -> &[usize] {
        &self.outgoing[node]
    }

    pub(crate) fn rank(&self, link: usize) -> u32 {
        self.rank[link]
    }

    /// Overlay built from the `olympic_lane` flags of the links file.
    pub fn lane_overlay(&self) -> CapacityOverlay {
        CapacityOverlay {
            entries: self
                .olympic_lanes
                .iter()
                .map(|e| (e.clone(), DEFAULT_LANE_MULTIPLIER))
                .collect(),
        }
    }

    /// Returns a copy with link capacities scaled by the overlay.
    pub fn apply_overlay(&self, overlay: &CapacityOverlay) -> Result<RoadNetwork> {
        let mut errs = Vec::new();
        for (edge, m) in &overlay.entries {
            if !self.link_index.contains_key(edge) {
                errs.push(format!("overlay references unknown edge `{edge}`"));
            } else if !(m.is_finite() && *m > 0.0 && *m <= 1.0) {
                errs.push(format!("overlay multiplier for `{edge}` must be in (0, 1], got {m}"));
            }
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        let mut out = self.clone();
        for (edge, m) in &overlay.entries {
            let i = self.link_index[edge];
            out.links[i].capacity *= m;
        }
        Ok(out)
    }
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    node_id: String,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct LinkRow {
    edge_id: String,
    from: String,
    to: String,
    length_m: f64,
    capacity_vph: f64,
    #[serde(default)]
    freeflow_time_min: Option<f64>,
    #[serde(default)]
    freeflow_speed_kmh: Option<f64>,
    #[serde(default, deserialize_with = "crate::io::de_flag")]
    olympic_lane: bool,
}

#[derive(Debug, Deserialize)]
struct OverlayRow {
    edge_id: String,
    multiplier: f64,
}

pub fn load_nodes(path: &Path) -> Result<Vec<Node>> {
    crate::io::read_rows::<NodeRow>(path, &["node_id", "lat", "lon"])?
        .into_iter()
        .map(|(_, r)| {
            Ok(Node {
                node_id: r.node_id,
                lat: r.lat,
                lon: r.lon,
            })
        })
        .collect()
}

/// Loads links plus the set of edges flagged as Olympic lanes.
pub fn load_links(path: &Path) -> Result<(Vec<Link>, BTreeSet<String>)> {
    let rows = crate::io::read_rows::<LinkRow>(
        path,
        &["edge_id", "from", "to", "length_m", "capacity_vph"],
    )?;
    let mut links = Vec::with_capacity(rows.len());
    let mut lanes = BTreeSet::new();
    let mut errs = Vec::new();
    for (line, r) in rows {
        let freeflow_time = match (r.freeflow_time_min, r.freeflow_speed_kmh) {
            (Some(t), None) => t,
            (None, Some(speed)) if speed > 0.0 => r.length_m / 1000.0 / speed * 60.0,
            (None, Some(speed)) => {
                errs.push(format!("line {line}: free-flow speed must be > 0, got {speed}"));
                continue;
            }
            _ => {
                errs.push(format!(
                    "line {line}: exactly one of freeflow_time_min / freeflow_speed_kmh is required"
                ));
                continue;
            }
        };
        if r.olympic_lane {
            lanes.insert(r.edge_id.clone());
        }
        links.push(Link {
            edge_id: r.edge_id,
            from: r.from,
            to: r.to,
            length: r.length_m,
            capacity: r.capacity_vph,
            freeflow_time,
        });
    }
    if !errs.is_empty() {
        return Err(Error::format(path, errs.join("; ")));
    }
    Ok((links, lanes))
}

pub fn load_network(nodes: &Path, links: &Path, params: BprParams) -> Result<RoadNetwork> {
    let nodes = load_nodes(nodes)?;
    let (links, lanes) = load_links(links)?;
    RoadNetwork::with_lanes(nodes, links, params, lanes)
}

pub fn load_overlay(path: &Path) -> Result<CapacityOverlay> {
    let rows = crate::io::read_rows::<OverlayRow>(path, &["edge_id", "multiplier"])?;
    let mut entries = BTreeMap::new();
    for (line, r) in rows {
        if entries.insert(r.edge_id.clone(), r.multiplier).is_some() {
            return Err(Error::format(
                path,
                format!("line {line}: duplicate overlay entry for `{}`", r.edge_id),
            ));
        }
    }
    Ok(CapacityOverlay { entries })
}

pub fn write_nodes(path: &Path, nodes: &[Node]) -> Result<()> {
    let mut w = crate::io::writer(path)?;
    crate::io::write_record(path, &mut w, ["node_id", "lat", "lon"])?;
    for n in nodes {
        crate::io::write_record(
            path,
            &mut w,
            [n.node_id.clone(), n.lat.to_string(), n.lon.to_string()],
        )?;
    }
    crate::io::flush(path, w)
}

pub fn write_links(path: &Path, network: &RoadNetwork) -> Result<()> {
    let mut w = crate::io::writer(path)?;
    crate::io::write_record(
        path,
        &mut w,
        [
            "edge_id",
            "from",
            "to",
            "length_m",
            "capacity_vph",
            "freeflow_time_min",
            "olympic_lane",
        ],
    )?;
    for l in network.links() {
        let lane = network.olympic_lanes().contains(&l.edge_id);
        crate::io::write_record(
            path,
            &mut w,
            [
                l.edge_id.clone(),
                l.from.clone(),
                l.to.clone(),
                l.length.to_string(),
                l.capacity.to_string(),
                l.freeflow_time.to_string(),
                lane.to_string(),
            ],
        )?;
    }
    crate::io::flush(path, w)
}

pub fn write_overlay(path: &Path, overlay: &CapacityOverlay) -> Result<()> {
    let mut w = crate::io::writer(path)?;
    crate::io::write_record(path, &mut w, ["edge_id", "multiplier"])?;
    for (e, m) in &overlay.entries {
        crate::io::write_record(path, &mut w, [e.clone(), m.to_string()])?;
    }
    crate::io::flush(path, w)
}
