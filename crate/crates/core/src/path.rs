//! Single-source shortest paths with deterministic tie-breaking.
//!
//! Equal-cost labels are resolved in favour of the lexicographically smallest
//! edge_id sequence. With strictly positive costs two distinct equal-cost
//! paths to the same node never prefix one another, so the order survives
//! extension and a label-setting search stays exact.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::network::RoadNetwork;

const NONE: usize = usize::MAX;

/// Shortest path between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub edges: Vec<String>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Label {
    cost: f64,
    node: usize,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path tree rooted at one origin.
#[derive(Debug, Clone)]
pub struct PathTree {
    origin: usize,
    dist: Vec<f64>,
    pred: Vec<usize>,
}

impl PathTree {
    /// Label-setting search from `origin` under per-link `costs` (indexed like
    /// [`RoadNetwork::links`]). Costs must be positive and finite; callers
    /// check that once per cost vector.
    pub fn build(network: &RoadNetwork, costs: &[f64], origin: usize) -> PathTree {
        let n = network.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NONE; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[origin] = 0.0;
        heap.push(Label {
            cost: 0.0,
            node: origin,
        });
        while let Some(Label { cost, node }) = heap.pop() {
            if settled[node] || cost > dist[node] {
                continue;
            }
            settled[node] = true;
            for &e in network.outgoing(node) {
                let head = network.head(e);
                if settled[head] {
                    continue;
                }
                let nd = cost + costs[e];
                if nd < dist[head] {
                    dist[head] = nd;
                    pred[head] = e;
                    heap.push(Label { cost: nd, node: head });
                } else if nd == dist[head]
                    && pred[head] != e
                    && lex_less(network, &pred, node, e, head)
                {
                    pred[head] = e;
                }
            }
        }
        PathTree { origin, dist, pred }
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn cost(&self, node: usize) -> f64 {
        self.dist[node]
    }

    pub fn reaches(&self, node: usize) -> bool {
        self.dist[node].is_finite()
    }

    /// Link indices from the origin to `node`, or `None` if unreachable.
    pub fn path_to(&self, network: &RoadNetwork, node: usize) -> Option<Vec<usize>> {
        if !self.reaches(node) {
            return None;
        }
        let mut out = Vec::new();
        let mut cur = node;
        while cur != self.origin {
            let e = self.pred[cur];
            out.push(e);
            cur = network.tail(e);
        }
        out.reverse();
        Some(out)
    }
}

/// Is the path (current path to `via`) + `edge` lexicographically smaller than
/// the current path to `head`?
fn lex_less(network: &RoadNetwork, pred: &[usize], via: usize, edge: usize, head: usize) -> bool {
    let mut candidate = chain(network, pred, via);
    candidate.push(network.rank(edge));
    let incumbent = chain(network, pred, head);
    candidate < incumbent
}

fn chain(network: &RoadNetwork, pred: &[usize], node: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut cur = node;
    while pred[cur] != NONE {
        let e = pred[cur];
        out.push(network.rank(e));
        cur = network.tail(e);
    }
    out.reverse();
    out
}

pub(crate) fn check_costs(network: &RoadNetwork, costs: &[f64]) -> Result<()> {
    let bad: Vec<String> = costs
        .iter()
        .enumerate()
        .filter(|(_, c)| !(c.is_finite() && **c > 0.0))
        .map(|(i, c)| format!("link `{}` has non-positive or non-finite cost {c}", network.link(i).edge_id))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(bad))
    }
}

/// Minimum-cost route from `origin` to `dest` under `costs` keyed by edge_id.
/// Every link must have a cost.
pub fn shortest_path(
    network: &RoadNetwork,
    costs: &HashMap<String, f64>,
    origin: &str,
    dest: &str,
) -> Result<Route> {
    let mut dense = Vec::with_capacity(network.link_count());
    let mut missing = Vec::new();
    for l in network.links() {
        match costs.get(&l.edge_id) {
            Some(c) => dense.push(*c),
            None => {
                missing.push(format!("no cost given for link `{}`", l.edge_id));
                dense.push(f64::NAN);
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Validation(missing));
    }
    check_costs(network, &dense)?;
    let o = network.node_idx(origin).ok_or_else(|| Error::NotFound {
        kind: "node",
        id: origin.to_string(),
    })?;
    let d = network.node_idx(dest).ok_or_else(|| Error::NotFound {
        kind: "node",
        id: dest.to_string(),
    })?;
    let tree = PathTree::build(network, &dense, o);
    let edges = tree.path_to(network, d).ok_or_else(|| Error::NoPath {
        origin: origin.to_string(),
        dest: dest.to_string(),
    })?;
    Ok(Route {
        edges: edges.iter().map(|&e| network.link(e).edge_id.clone()).collect(),
        cost: tree.cost(d),
    })
}
