use std::collections::BTreeMap;
use std::sync::Arc;

use log::debug;
use rayon::prelude::*;

use super::{AssignmentResult, LinkFlow, OdTime, PathFlow, Scenario, SolverConfig};
use crate::demand::{DemandMatrix, OdPair, Zone};
use crate::error::{Error, Result, Unreachable};
use crate::network::RoadNetwork;
use crate::path::{check_costs, PathTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum CostKind {
    /// Link travel time: user equilibrium.
    Time,
    /// Marginal link cost: system optimum.
    Marginal,
}

/// One OD pair resolved onto network nodes.
#[derive(Debug, Clone)]
pub(super) struct OdEntry {
    pub pair: OdPair,
    pub origin: usize,
    pub dest: usize,
    pub demand: f64,
}

/// Route flows of every OD entry, aligned with the entry list.
pub(super) type RouteFlows = Vec<Vec<(Vec<usize>, f64)>>;

pub(super) struct Equilibrium {
    pub volumes: Vec<f64>,
    pub routes: RouteFlows,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: Vec<f64>,
}

/// Assignment context: one network (with its effective capacities), the zone
/// attachment table and solver settings.
///
/// Shortest-path trees of different origins are built in parallel; every
/// reduction runs sequentially in origin order, so results do not depend on
/// the number of workers.
#[derive(Clone)]
pub struct Assigner<'a> {
    pub(super) network: &'a RoadNetwork,
    pub(super) zones: BTreeMap<String, usize>,
    pub(super) config: SolverConfig,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl<'a> Assigner<'a> {
    pub fn new(network: &'a RoadNetwork, zones: &[Zone], config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let mut map = BTreeMap::new();
        let mut errs = Vec::new();
        for z in zones {
            match network.node_idx(&z.attach_node) {
                Some(n) => {
                    map.insert(z.zone_id.clone(), n);
                }
                None => errs.push(format!(
                    "zone `{}` attaches to unknown node `{}`",
                    z.zone_id, z.attach_node
                )),
            }
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        Ok(Assigner {
            network,
            zones: map,
            config,
            pool: None,
        })
    }

    /// Runs path searches on a dedicated pool of `workers` threads.
    pub fn with_workers(mut self, workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Validation(vec![format!("cannot start worker pool: {e}")]))?;
        self.pool = Some(Arc::new(pool));
        Ok(self)
    }

    pub fn network(&self) -> &RoadNetwork {
        self.network
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub(super) fn compile(&self, demand: &DemandMatrix) -> Result<Vec<OdEntry>> {
        let mut out = Vec::with_capacity(demand.len());
        let mut errs = Vec::new();
        for (od, f) in &demand.flows {
            let (o, d) = (self.zones.get(&od.origin), self.zones.get(&od.dest));
            match (o, d) {
                (Some(&o), Some(&d)) => out.push(OdEntry {
                    pair: od.clone(),
                    origin: o,
                    dest: d,
                    demand: f.vehicles,
                }),
                _ => {
                    for z in [&od.origin, &od.dest] {
                        if !self.zones.contains_key(z) {
                            errs.push(format!("demand references unknown zone `{z}`"));
                        }
                    }
                }
            }
        }
        if !errs.is_empty() {
            errs.dedup();
            return Err(Error::Validation(errs));
        }
        Ok(out)
    }

    /// Shortest route and cost of every entry under `costs`.
    pub(super) fn routes(&self, costs: &[f64], ods: &[OdEntry]) -> Result<Vec<(Vec<usize>, f64)>> {
        let mut by_origin: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, od) in ods.iter().enumerate() {
            by_origin.entry(od.origin).or_default().push(i);
        }
        let groups: Vec<(usize, Vec<usize>)> = by_origin.into_iter().collect();
        let net = self.network;
        let search = || {
            groups
                .par_iter()
                .map(|(origin, members)| {
                    let tree = PathTree::build(net, costs, *origin);
                    members
                        .iter()
                        .map(|&i| {
                            let d = ods[i].dest;
                            (i, tree.path_to(net, d), tree.cost(d))
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        let found = match &self.pool {
            Some(pool) => pool.install(search),
            None => search(),
        };
        let mut out = vec![(Vec::new(), 0.0); ods.len()];
        let mut missing = Vec::new();
        for group in found {
            for (i, path, cost) in group {
                match path {
                    Some(p) => out[i] = (p, cost),
                    None => missing.push(Unreachable {
                        origin: ods[i].pair.origin.clone(),
                        dest: ods[i].pair.dest.clone(),
                    }),
                }
            }
        }
        if !missing.is_empty() {
            missing.sort_by(|a, b| (&a.origin, &a.dest).cmp(&(&b.origin, &b.dest)));
            return Err(Error::Unreachable(missing));
        }
        Ok(out)
    }

    pub(super) fn link_costs(&self, kind: CostKind, preload: &[f64], volumes: &[f64]) -> Vec<f64> {
        let p = self.network.params();
        self.network
            .links()
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let v = preload[i] + volumes[i];
                match kind {
                    CostKind::Time => p.time(l.freeflow_time, l.capacity, v),
                    CostKind::Marginal => p.marginal(l.freeflow_time, l.capacity, v),
                }
            })
            .collect()
    }

    pub(super) fn link_times(&self, volumes: &[f64]) -> Vec<f64> {
        let zero = vec![0.0; volumes.len()];
        self.link_costs(CostKind::Time, &zero, volumes)
    }

    fn objective(&self, kind: CostKind, preload: &[f64], volumes: &[f64]) -> f64 {
        let p = self.network.params();
        self.network
            .links()
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let (pre, v) = (preload[i], preload[i] + volumes[i]);
                match kind {
                    CostKind::Time => {
                        p.integral(l.freeflow_time, l.capacity, v)
                            - p.integral(l.freeflow_time, l.capacity, pre)
                    }
                    CostKind::Marginal => v * p.time(l.freeflow_time, l.capacity, v),
                }
            })
            .sum()
    }

    /// Convex-combination iteration minimising the Beckmann objective
    /// (`CostKind::Time`) or total travel time (`CostKind::Marginal`) of
    /// `ods`, on top of a fixed background `preload`.
    pub(super) fn equilibrate(&self, kind: CostKind, ods: &[OdEntry], preload: &[f64]) -> Result<Equilibrium> {
        let m = self.network.link_count();
        let active: Vec<OdEntry> = ods.iter().filter(|o| o.demand > 0.0).cloned().collect();
        let slot: Vec<usize> = ods
            .iter()
            .enumerate()
            .filter(|(_, o)| o.demand > 0.0)
            .map(|(i, _)| i)
            .collect();
        let mut routes: RouteFlows = vec![Vec::new(); ods.len()];
        if active.is_empty() {
            return Ok(Equilibrium {
                volumes: vec![0.0; m],
                routes,
                gap: 0.0,
                iterations: 0,
                converged: true,
                objective: Vec::new(),
            });
        }

        let zero = vec![0.0; m];
        let costs = self.link_costs(kind, preload, &zero);
        check_costs(self.network, &costs)?;
        for ((path, _), (&s, od)) in self.routes(&costs, &active)?.into_iter().zip(slot.iter().zip(&active)) {
            routes[s].push((path, od.demand));
        }
        let mut volumes = aggregate(m, &routes);
        let mut objective = vec![self.objective(kind, preload, &volumes)];
        let mut iterations = 0;
        let (gap, converged) = loop {
            let costs = self.link_costs(kind, preload, &volumes);
            check_costs(self.network, &costs)?;
            let best = self.routes(&costs, &active)?;
            let current: f64 = volumes.iter().zip(&costs).map(|(v, c)| v * c).sum();
            let lower: f64 = best.iter().zip(&active).map(|((_, c), od)| c * od.demand).sum();
            let gap = if current > 0.0 {
                ((current - lower) / current).max(0.0)
            } else {
                0.0
            };
            debug!("iteration {iterations}: relative gap {gap:e}");
            if gap <= self.config.relative_gap_tol {
                break (gap, true);
            }
            if iterations >= self.config.max_iterations {
                break (gap, false);
            }

            let mut target = vec![0.0; m];
            for ((path, _), od) in best.iter().zip(&active) {
                for &e in path {
                    target[e] += od.demand;
                }
            }
            let step = self.line_search(kind, preload, &volumes, &target);
            for flows in routes.iter_mut() {
                for (_, f) in flows.iter_mut() {
                    *f *= 1.0 - step;
                }
            }
            for ((path, _), (&s, od)) in best.into_iter().zip(slot.iter().zip(&active)) {
                let add = step * od.demand;
                match routes[s].iter_mut().find(|(p, _)| *p == path) {
                    Some((_, f)) => *f += add,
                    None => routes[s].push((path, add)),
                }
                routes[s].retain(|(_, f)| *f > 0.0);
            }
            volumes = aggregate(m, &routes);
            objective.push(self.objective(kind, preload, &volumes));
            iterations += 1;
        };
        Ok(Equilibrium {
            volumes,
            routes,
            gap,
            iterations,
            converged,
            objective,
        })
    }

    /// Exact line search: bisection on the directional derivative of the
    /// objective along `target - volumes`.
    fn line_search(&self, kind: CostKind, preload: &[f64], volumes: &[f64], target: &[f64]) -> f64 {
        let dir: Vec<f64> = target.iter().zip(volumes).map(|(y, x)| y - x).collect();
        let derivative = |step: f64| -> f64 {
            let trial: Vec<f64> = volumes.iter().zip(&dir).map(|(x, d)| x + step * d).collect();
            self.link_costs(kind, preload, &trial)
                .iter()
                .zip(&dir)
                .map(|(c, d)| c * d)
                .sum()
        };
        if derivative(1.0) <= 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > self.config.line_search_tol {
            let mid = 0.5 * (lo + hi);
            if derivative(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub(super) fn link_states(&self, volumes: &[f64]) -> Vec<LinkFlow> {
        let times = self.link_times(volumes);
        self.network
            .links()
            .iter()
            .zip(volumes.iter().zip(times))
            .map(|(l, (&v, t))| LinkFlow {
                edge_id: l.edge_id.clone(),
                volume: v,
                time: t,
                capacity: l.capacity,
            })
            .collect()
    }

    pub(super) fn path_flows(&self, ods: &[OdEntry], routes: &RouteFlows) -> Vec<PathFlow> {
        let mut out: Vec<PathFlow> = ods
            .iter()
            .zip(routes)
            .flat_map(|(od, flows)| {
                flows.iter().filter(|(_, f)| *f > 0.0).map(move |(p, f)| PathFlow {
                    origin: od.pair.origin.clone(),
                    dest: od.pair.dest.clone(),
                    path: p.iter().map(|&e| self.network.link(e).edge_id.clone()).collect(),
                    flow: *f,
                })
            })
            .collect();
        sort_paths(&mut out);
        out
    }

    /// All-or-nothing assignment of `demand` under fixed link `costs`
    /// (indexed like the network's links).
    pub fn all_or_nothing(&self, costs: &[f64], demand: &DemandMatrix) -> Result<AssignmentResult> {
        check_costs(self.network, costs)?;
        let ods = self.compile(demand)?;
        let best = self.routes(costs, &ods)?;
        let routes: RouteFlows = best
            .into_iter()
            .zip(&ods)
            .map(|((p, _), od)| if od.demand > 0.0 { vec![(p, od.demand)] } else { Vec::new() })
            .collect();
        let volumes = aggregate(self.network.link_count(), &routes);
        let links = self.link_states(&volumes);
        let times: Vec<f64> = links.iter().map(|l| l.time).collect();
        let od_times = self.mean_route_times(&ods, &routes, &times)?;
        Ok(AssignmentResult {
            scenario: Scenario::Baseline,
            links,
            paths: self.path_flows(&ods, &routes),
            od_times,
            relative_gap: None,
            iterations: 0,
            converged: true,
            objective: Vec::new(),
        })
    }

    /// User equilibrium of `demand` (the selfish scenario; relabel for the
    /// pre-event baseline).
    pub fn solve_ue(&self, demand: &DemandMatrix) -> Result<AssignmentResult> {
        let ods = self.compile(demand)?;
        let zero = vec![0.0; self.network.link_count()];
        let eq = self.equilibrate(CostKind::Time, &ods, &zero)?;
        let links = self.link_states(&eq.volumes);
        let times: Vec<f64> = links.iter().map(|l| l.time).collect();
        let od_times = self.shortest_times(&ods, &times)?;
        Ok(AssignmentResult {
            scenario: Scenario::Selfish,
            links,
            paths: self.path_flows(&ods, &eq.routes),
            od_times,
            relative_gap: Some(eq.gap),
            iterations: eq.iterations,
            converged: eq.converged,
            objective: eq.objective,
        })
    }

    /// System optimum of `demand`: the same iteration routed on marginal costs.
    pub fn solve_so(&self, demand: &DemandMatrix) -> Result<AssignmentResult> {
        let ods = self.compile(demand)?;
        let zero = vec![0.0; self.network.link_count()];
        let eq = self.equilibrate(CostKind::Marginal, &ods, &zero)?;
        let links = self.link_states(&eq.volumes);
        let times: Vec<f64> = links.iter().map(|l| l.time).collect();
        let od_times = self.mean_route_times(&ods, &eq.routes, &times)?;
        Ok(AssignmentResult {
            scenario: Scenario::Altruism,
            links,
            paths: self.path_flows(&ods, &eq.routes),
            od_times,
            relative_gap: Some(eq.gap),
            iterations: eq.iterations,
            converged: eq.converged,
            objective: eq.objective,
        })
    }

    /// Shortest-path time of every entry at `times`, paired with its demand.
    pub(super) fn shortest_times(&self, ods: &[OdEntry], times: &[f64]) -> Result<Vec<OdTime>> {
        let best = self.routes(times, ods)?;
        Ok(ods
            .iter()
            .zip(best)
            .map(|(od, (_, t))| OdTime {
                origin: od.pair.origin.clone(),
                dest: od.pair.dest.clone(),
                time: t,
                flow: od.demand,
            })
            .collect())
    }

    /// Flow-weighted mean route time of every entry at `times`; entries
    /// without flow fall back to their shortest-path time.
    pub(super) fn mean_route_times(&self, ods: &[OdEntry], routes: &RouteFlows, times: &[f64]) -> Result<Vec<OdTime>> {
        let needs_sp: Vec<OdEntry> = ods
            .iter()
            .zip(routes)
            .filter(|(_, r)| r.iter().all(|(_, f)| *f <= 0.0))
            .map(|(o, _)| o.clone())
            .collect();
        let sp: BTreeMap<OdPair, f64> = if needs_sp.is_empty() {
            BTreeMap::new()
        } else {
            self.routes(times, &needs_sp)?
                .into_iter()
                .zip(&needs_sp)
                .map(|((_, c), o)| (o.pair.clone(), c))
                .collect()
        };
        Ok(ods
            .iter()
            .zip(routes)
            .map(|(od, flows)| {
                let total: f64 = flows.iter().map(|(_, f)| f).sum();
                let time = if total > 0.0 {
                    flows
                        .iter()
                        .map(|(p, f)| f * p.iter().map(|&e| times[e]).sum::<f64>())
                        .sum::<f64>()
                        / total
                } else {
                    sp[&od.pair]
                };
                OdTime {
                    origin: od.pair.origin.clone(),
                    dest: od.pair.dest.clone(),
                    time,
                    flow: total,
                }
            })
            .collect())
    }
}

pub(super) fn aggregate(links: usize, routes: &RouteFlows) -> Vec<f64> {
    let mut v = vec![0.0; links];
    for flows in routes {
        for (p, f) in flows {
            for &e in p {
                v[e] += f;
            }
        }
    }
    v
}

pub(super) fn sort_paths(paths: &mut [PathFlow]) {
    paths.sort_by(|a, b| (&a.origin, &a.dest, &a.path).cmp(&(&b.origin, &b.dest, &b.path)));
}
