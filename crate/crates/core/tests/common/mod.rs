//! Independent oracles shared by the integration tests. Nothing here calls
//! the solvers; each helper recomputes a quantity from first principles.
#![allow(dead_code)]

use evflow::{BprParams, Link, RoadNetwork};

/// BPR time straight from the formula, without the library's helpers.
pub fn bpr(freeflow: f64, capacity: f64, volume: f64) -> f64 {
    1.15 * (1.0 + 0.18 * (volume / capacity).powi(5)) * freeflow
}

/// Closed-form antiderivative of [`bpr`] from 0 to `volume`.
pub fn bpr_area(freeflow: f64, capacity: f64, volume: f64) -> f64 {
    1.15 * freeflow * (volume + 0.18 * volume.powi(6) / (6.0 * capacity.powi(5)))
}

pub fn link_of<'a>(net: &'a RoadNetwork, id: &str) -> &'a Link {
    net.links().iter().find(|l| l.edge_id == id).expect("link exists")
}

/// Bisection root of a monotone increasing `f` on `[lo, hi]`.
pub fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equilibrium flow on the first of two parallel links with optional fixed
/// background loads: equal times when interior, otherwise a corner.
pub fn parallel_split(a: (f64, f64, f64), b: (f64, f64, f64), demand: f64) -> f64 {
    let (ta, ca, pa) = a;
    let (tb, cb, pb) = b;
    let gap = |x: f64| bpr(ta, ca, pa + x) - bpr(tb, cb, pb + demand - x);
    if gap(0.0) >= 0.0 {
        0.0
    } else if gap(demand) <= 0.0 {
        demand
    } else {
        bisect(0.0, demand, gap)
    }
}

/// Every simple path from `from` to `to`, as link index lists.
pub fn simple_paths(net: &RoadNetwork, from: usize, to: usize) -> Vec<Vec<usize>> {
    fn walk(
        net: &RoadNetwork,
        at: usize,
        to: usize,
        seen: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == to {
            out.push(path.clone());
            return;
        }
        for &l in net.outgoing(at) {
            let next = net.head(l);
            if !seen[next] {
                seen[next] = true;
                path.push(l);
                walk(net, next, to, seen, path, out);
                path.pop();
                seen[next] = false;
            }
        }
    }
    let mut seen = vec![false; net.node_count()];
    seen[from] = true;
    let mut out = Vec::new();
    walk(net, from, to, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Braess network path flows `(s-a-t, s-b-t, s-a-b-t)` minimising
/// `objective(link volumes)` over the 0.1-vehicle grid of the flow simplex.
/// Link volumes are passed in the order `sa, at, sb, bt, ab`.
pub fn braess_grid(demand: f64, objective: impl Fn([f64; 5]) -> f64) -> [f64; 3] {
    let steps = (demand * 10.0).round() as i64;
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            let x1 = i as f64 / 10.0;
            let x2 = j as f64 / 10.0;
            let x3 = (steps - i - j) as f64 / 10.0;
            let v = [x1 + x3, x1, x2, x2 + x3, x3];
            let z = objective(v);
            if z < best.0 {
                best = (z, [x1, x2, x3]);
            }
        }
    }
    best.1
}

/// `(freeflow, capacity)` of the Braess links in `sa, at, sb, bt, ab` order.
pub fn braess_links(net: &RoadNetwork) -> [(f64, f64); 5] {
    ["sa", "at", "sb", "bt", "ab"].map(|id| {
        let l = link_of(net, id);
        (l.freeflow_time, l.capacity)
    })
}

pub fn default_params() -> BprParams {
    BprParams::default()
}
