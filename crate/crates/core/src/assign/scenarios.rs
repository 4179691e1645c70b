//! Habit and mixed (partially selfish) event scenarios.

use std::collections::BTreeMap;

use super::solver::{aggregate, sort_paths, CostKind, OdEntry, RouteFlows};
use super::{Assigner, AssignmentResult, OdTime, PathFlow, Scenario};
use crate::demand::{DemandMatrix, OdPair};
use crate::error::{Error, Result};
use crate::path::check_costs;

/// Route and flow lists per OD pair.
type GroupedRoutes = BTreeMap<OdPair, Vec<(Vec<usize>, f64)>>;

impl Assigner<'_> {
    fn resolve_path(&self, path: &[String]) -> Result<Vec<usize>> {
        path.iter()
            .map(|e| {
                self.network.link_idx(e).ok_or_else(|| Error::NotFound {
                    kind: "edge",
                    id: e.clone(),
                })
            })
            .collect()
    }

    fn entry_for(&self, od: &OdPair, demand: f64) -> Result<OdEntry> {
        let lookup = |z: &String| {
            self.zones.get(z).copied().ok_or_else(|| Error::NotFound {
                kind: "zone",
                id: z.clone(),
            })
        };
        Ok(OdEntry {
            pair: od.clone(),
            origin: lookup(&od.origin)?,
            dest: lookup(&od.dest)?,
            demand,
        })
    }

    /// Routes taken from another result, grouped per OD pair with every flow
    /// multiplied by `factor`.
    fn frozen_routes(&self, from: &AssignmentResult, factor: f64) -> Result<GroupedRoutes> {
        let mut out = GroupedRoutes::new();
        for p in &from.paths {
            let flow = p.flow * factor;
            if flow <= 0.0 {
                continue;
            }
            let route = self.resolve_path(&p.path)?;
            out.entry(OdPair::new(p.origin.clone(), p.dest.clone()))
                .or_default()
                .push((route, flow));
        }
        Ok(out)
    }

    fn check_alignment(&self, other: &AssignmentResult) -> Result<()> {
        let same = other.links.len() == self.network.link_count()
            && other
                .links
                .iter()
                .zip(self.network.links())
                .all(|(a, b)| a.edge_id == b.edge_id);
        if same {
            Ok(())
        } else {
            Err(Error::Validation(vec![format!(
                "{} result was computed on a different network",
                other.scenario
            )]))
        }
    }

    /// Habit scenario: pre-event routes are kept, tourist trips take the
    /// pre-event shortest paths under `baseline_costs`, and link times are
    /// re-evaluated once at the summed volumes on this (event) network.
    pub fn solve_habit(
        &self,
        baseline: &AssignmentResult,
        delta: &DemandMatrix,
        baseline_costs: &[f64],
    ) -> Result<AssignmentResult> {
        self.check_alignment(baseline)?;
        check_costs(self.network, baseline_costs)?;
        let mut grouped = self.frozen_routes(baseline, 1.0)?;

        let tourists = self.compile(delta)?;
        let best = self.routes(baseline_costs, &tourists)?;
        for ((path, _), od) in best.into_iter().zip(&tourists) {
            if od.demand <= 0.0 {
                continue;
            }
            let flows = grouped.entry(od.pair.clone()).or_default();
            match flows.iter_mut().find(|(p, _)| *p == path) {
                Some((_, f)) => *f += od.demand,
                None => flows.push((path, od.demand)),
            }
        }

        // Every OD pair of either demand gets a travel time.
        let mut pairs: BTreeMap<OdPair, ()> = baseline.od_times.iter().map(|t| (t.pair(), ())).collect();
        pairs.extend(tourists.iter().map(|o| (o.pair.clone(), ())));
        let mut ods = Vec::with_capacity(pairs.len());
        let mut routes: RouteFlows = Vec::with_capacity(pairs.len());
        for od in pairs.into_keys() {
            let flows = grouped.remove(&od).unwrap_or_default();
            let total = flows.iter().map(|(_, f)| f).sum();
            ods.push(self.entry_for(&od, total)?);
            routes.push(flows);
        }

        let volumes = aggregate(self.network.link_count(), &routes);
        let links = self.link_states(&volumes);
        let times: Vec<f64> = links.iter().map(|l| l.time).collect();

        // Pairs that carried no flow keep their pre-event shortest path.
        let idle: Vec<usize> = (0..ods.len()).filter(|&i| routes[i].is_empty()).collect();
        if !idle.is_empty() {
            let idle_ods: Vec<OdEntry> = idle.iter().map(|&i| ods[i].clone()).collect();
            let best = self.routes(baseline_costs, &idle_ods)?;
            for (&i, (path, _)) in idle.iter().zip(best) {
                routes[i] = vec![(path, 0.0)];
            }
        }
        let od_times = frozen_route_times(&ods, &routes, &times);
        routes.iter_mut().for_each(|r| r.retain(|(_, f)| *f > 0.0));

        Ok(AssignmentResult {
            scenario: Scenario::Habit,
            links,
            paths: self.path_flows(&ods, &routes),
            od_times,
            relative_gap: None,
            iterations: 0,
            converged: true,
            objective: Vec::new(),
        })
    }

    /// Mixed scenario: `1 - lambda` of every habit link volume stays as a
    /// fixed background load while `lambda` of each OD's demand is brought to
    /// equilibrium on top of it. OD times blend the habit time with the
    /// shortest-path time at the mixed volumes.
    pub fn solve_mixed(&self, habit: &AssignmentResult, demand: &DemandMatrix, lambda: f64) -> Result<AssignmentResult> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Validation(vec![format!(
                "selfish fraction lambda must be in [0, 1], got {lambda}"
            )]));
        }
        self.check_alignment(habit)?;
        let keep = 1.0 - lambda;
        let preload: Vec<f64> = habit.links.iter().map(|l| l.volume * keep).collect();
        let selfish = demand.scaled_vehicles(lambda);
        let ods = self.compile(&selfish)?;
        let eq = self.equilibrate(CostKind::Time, &ods, &preload)?;

        let volumes: Vec<f64> = preload.iter().zip(&eq.volumes).map(|(p, x)| p + x).collect();
        let links = self.link_states(&volumes);
        let times: Vec<f64> = links.iter().map(|l| l.time).collect();

        let shortest = self.shortest_times(&ods, &times)?;
        let mut od_times = Vec::with_capacity(shortest.len());
        for (s, od) in shortest.into_iter().zip(&ods) {
            let h = habit.od_time(&od.pair).ok_or_else(|| Error::NotFound {
                kind: "habit OD time",
                id: od.pair.to_string(),
            })?;
            let flow = demand.get(&od.pair).map(|f| f.vehicles).unwrap_or(0.0);
            od_times.push(OdTime {
                origin: s.origin,
                dest: s.dest,
                time: keep * h.time + lambda * s.time,
                flow,
            });
        }

        let mut paths: Vec<PathFlow> = habit
            .paths
            .iter()
            .filter(|p| p.flow * keep > 0.0)
            .map(|p| PathFlow {
                flow: p.flow * keep,
                ..p.clone()
            })
            .collect();
        for p in self.path_flows(&ods, &eq.routes) {
            match paths
                .iter_mut()
                .find(|q| q.origin == p.origin && q.dest == p.dest && q.path == p.path)
            {
                Some(q) => q.flow += p.flow,
                None => paths.push(p),
            }
        }
        sort_paths(&mut paths);

        Ok(AssignmentResult {
            scenario: Scenario::Mixed { lambda },
            links,
            paths,
            od_times,
            relative_gap: Some(eq.gap),
            iterations: eq.iterations,
            converged: eq.converged,
            objective: eq.objective,
        })
    }
}

/// Flow-weighted mean time over each entry's routes; zero-flow routes count
/// with unit weight so idle pairs still get the time of their frozen route.
fn frozen_route_times(ods: &[OdEntry], routes: &RouteFlows, times: &[f64]) -> Vec<OdTime> {
    ods.iter()
        .zip(routes)
        .map(|(od, flows)| {
            let total: f64 = flows.iter().map(|(_, f)| f).sum();
            let route_time = |p: &Vec<usize>| p.iter().map(|&e| times[e]).sum::<f64>();
            let time = if total > 0.0 {
                flows.iter().map(|(p, f)| f * route_time(p)).sum::<f64>() / total
            } else {
                flows.iter().map(|(p, _)| route_time(p)).sum::<f64>() / flows.len().max(1) as f64
            };
            OdTime {
                origin: od.pair.origin.clone(),
                dest: od.pair.dest.clone(),
                time,
                flow: total,
            }
        })
        .collect()
}
