//! Informed mode-change strategy: rank OD pairs near rapid transit by
//! marginal path cost, remove part of their vehicle demand, reassign and
//! compare against a proportional-uniform benchmark of the same size.

mod transit;

pub use transit::*;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assign::{Assigner, AssignmentResult};
use crate::demand::{nearest_station, DemandMatrix, OdPair, StationPoint, Zone};
use crate::error::{Error, Result};
use crate::metrics::{average_speed, collective_time};
use crate::network::RoadNetwork;

/// Marginal cost (minutes) of one more vehicle on the minimum-time used path
/// of `od`: the sum of marginal edge costs along it at the result's volumes.
/// Ties between equally fast paths go to the lexicographically smallest
/// edge sequence.
pub fn marginal_path_cost(network: &RoadNetwork, result: &AssignmentResult, od: &OdPair) -> Result<f64> {
    let path = min_time_path(result, od)?;
    let p = network.params();
    path.iter()
        .map(|e| {
            let i = network.link_idx(e).ok_or_else(|| Error::NotFound {
                kind: "edge",
                id: e.clone(),
            })?;
            let state = &result.links[i];
            Ok(p.marginal(network.link(i).freeflow_time, state.capacity, state.volume))
        })
        .sum()
}

/// Used path of `od` with the smallest time in `result`.
pub fn min_time_path<'a>(result: &'a AssignmentResult, od: &OdPair) -> Result<&'a [String]> {
    let mut best: Option<(&[String], f64)> = None;
    for p in result.paths_of(od) {
        let t = result.path_time(&p.path)?;
        // paths are sorted, so a strict comparison keeps the smallest sequence on ties
        if best.is_none_or(|(_, bt)| t < bt) {
            best = Some((&p.path, t));
        }
    }
    best.map(|(p, _)| p).ok_or_else(|| Error::NotFound {
        kind: "used path for OD pair",
        id: od.to_string(),
    })
}

/// An OD pair whose both zone centroids are close to a station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EligibleOd {
    pub origin: String,
    pub dest: String,
    pub origin_station: String,
    pub dest_station: String,
    /// Minutes.
    pub mc_p: f64,
    /// Vehicles per hour.
    pub vehicle_flow: f64,
}

impl EligibleOd {
    pub fn pair(&self) -> OdPair {
        OdPair::new(self.origin.clone(), self.dest.clone())
    }
}

/// OD pairs carrying flow in `result` whose origin and destination centroids
/// both lie within `radius_km` of a station (closed ball).
pub fn eligible_ods(
    network: &RoadNetwork,
    zones: &[Zone],
    stations: &[StationPoint],
    result: &AssignmentResult,
    radius_km: f64,
) -> Result<Vec<EligibleOd>> {
    if stations.is_empty() {
        return Err(Error::Validation(vec!["no transit stations given".to_string()]));
    }
    if !(radius_km.is_finite() && radius_km >= 0.0) {
        return Err(Error::Validation(vec![format!(
            "station radius must be non-negative, got {radius_km}"
        )]));
    }
    let near: BTreeMap<&str, &str> = zones
        .iter()
        .filter_map(|z| {
            let (s, d) = nearest_station(z.lat, z.lon, stations)?;
            (d <= radius_km).then_some((z.zone_id.as_str(), s.station_id.as_str()))
        })
        .collect();
    let mut out = Vec::new();
    for t in &result.od_times {
        if t.flow <= 0.0 {
            continue;
        }
        let (Some(os), Some(ds)) = (near.get(t.origin.as_str()), near.get(t.dest.as_str())) else {
            continue;
        };
        out.push(EligibleOd {
            origin: t.origin.clone(),
            dest: t.dest.clone(),
            origin_station: os.to_string(),
            dest_station: ds.to_string(),
            mc_p: marginal_path_cost(network, result, &t.pair())?,
            vehicle_flow: t.flow,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    Marginal,
    Uniform,
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanMode::Marginal => "marginal",
            PlanMode::Uniform => "uniform",
        })
    }
}

impl FromStr for PlanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(PlanMode::Marginal),
            "uniform" => Ok(PlanMode::Uniform),
            other => Err(Error::Validation(vec![format!(
                "unknown strategy mode `{other}` (expected marginal or uniform)"
            )])),
        }
    }
}

/// Vehicle flow removed from one OD pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub origin: String,
    pub dest: String,
    pub origin_station: String,
    pub dest_station: String,
    /// Vehicles per hour.
    pub removed: f64,
    pub mc_p: f64,
}

impl Reduction {
    pub fn pair(&self) -> OdPair {
        OdPair::new(self.origin.clone(), self.dest.clone())
    }

    fn from_eligible(e: &EligibleOd, removed: f64) -> Self {
        Reduction {
            origin: e.origin.clone(),
            dest: e.dest.clone(),
            origin_station: e.origin_station.clone(),
            dest_station: e.dest_station.clone(),
            removed,
            mc_p: e.mc_p,
        }
    }
}

pub fn total_removed(reductions: &[Reduction]) -> f64 {
    reductions.iter().map(|r| r.removed).sum()
}

fn rank(a: &EligibleOd, b: &EligibleOd) -> Ordering {
    b.mc_p
        .total_cmp(&a.mc_p)
        .then_with(|| (&a.origin, &a.dest).cmp(&(&b.origin, &b.dest)))
}

/// Removes `fraction` of the vehicle flow of the `top_k` eligible OD pairs
/// with the highest marginal path cost. Output is in rank order.
pub fn plan_marginal(eligible: &[EligibleOd], top_k: usize, fraction: f64) -> Result<Vec<Reduction>> {
    check_fraction(fraction)?;
    if top_k == 0 {
        return Err(Error::Validation(vec!["top_k must be at least 1".to_string()]));
    }
    let mut ranked: Vec<&EligibleOd> = eligible.iter().collect();
    ranked.sort_by(|a, b| rank(a, b));
    Ok(ranked
        .into_iter()
        .take(top_k)
        .map(|e| Reduction::from_eligible(e, fraction * e.vehicle_flow))
        .collect())
}

/// Removes `total` vehicles spread over all eligible pairs in proportion to
/// their flows. Output is in OD order.
pub fn plan_uniform(eligible: &[EligibleOd], total: f64) -> Result<Vec<Reduction>> {
    let available: f64 = eligible.iter().map(|e| e.vehicle_flow).sum();
    if !(total.is_finite() && total >= 0.0) || total > available * (1.0 + 1e-12) {
        return Err(Error::Validation(vec![format!(
            "uniform reduction of {total} vehicles is infeasible: eligible flow is {available}"
        )]));
    }
    let share = if available > 0.0 { (total / available).min(1.0) } else { 0.0 };
    let mut out: Vec<Reduction> = eligible
        .iter()
        .map(|e| Reduction::from_eligible(e, share * e.vehicle_flow))
        .collect();
    out.sort_by(|a, b| (&a.origin, &a.dest).cmp(&(&b.origin, &b.dest)));
    Ok(out)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if (0.0..=1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(Error::Validation(vec![format!(
            "reduction fraction must be in [0, 1], got {fraction}"
        )]))
    }
}

/// Before/after comparison of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Savings {
    /// Vehicle-minutes.
    pub collective_before: f64,
    pub collective_after: f64,
    pub saving_pct: f64,
    pub removed_vehicles: f64,
    /// Removed vehicles as a percentage of all vehicle demand.
    pub demand_removed_pct: f64,
    /// km/h.
    pub speed_before: f64,
    pub speed_after: f64,
    pub converged: bool,
    pub relative_gap: Option<f64>,
}

/// Reassigns `demand` minus `reductions` at user equilibrium and compares it
/// with `before`, the equilibrium of the unreduced demand.
pub fn apply_and_evaluate(
    assigner: &Assigner<'_>,
    demand: &DemandMatrix,
    before: &AssignmentResult,
    reductions: &[Reduction],
) -> Result<(AssignmentResult, Savings)> {
    let network = assigner.network();
    let mut cut: BTreeMap<OdPair, f64> = BTreeMap::new();
    for r in reductions {
        *cut.entry(r.pair()).or_insert(0.0) += r.removed;
    }
    let removed: f64 = cut.values().sum();
    let after = if removed > 0.0 {
        assigner.solve_ue(&demand.reduced(&cut)?)?
    } else {
        before.clone()
    };
    let t_before = collective_time(before);
    let t_after = collective_time(&after);
    let total = demand.total_vehicles();
    let savings = Savings {
        collective_before: t_before,
        collective_after: t_after,
        saving_pct: if t_before > 0.0 {
            (t_before - t_after) / t_before * 100.0
        } else {
            0.0
        },
        removed_vehicles: removed,
        demand_removed_pct: if total > 0.0 { removed / total * 100.0 } else { 0.0 },
        speed_before: average_speed(before, network)?,
        speed_after: if t_after > 0.0 {
            average_speed(&after, network)?
        } else {
            0.0
        },
        converged: after.converged,
        relative_gap: after.relative_gap,
    };
    Ok((after, savings))
}

/// Persons leaving the road per removed vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub commuter: f64,
    pub tourist_taxi: f64,
}

impl Default for Occupancy {
    fn default() -> Self {
        Occupancy {
            commuter: 1.0,
            tourist_taxi: 2.0,
        }
    }
}

/// Persons moved to transit by each reduction. A pair's removed vehicles
/// are split between tourist taxis and other vehicles in proportion to the
/// tourist share of its vehicle demand.
pub fn removed_persons(
    reductions: &[Reduction],
    demand: &DemandMatrix,
    tourist_vehicles: &BTreeMap<OdPair, f64>,
    occupancy: Occupancy,
) -> Vec<(Reduction, f64)> {
    reductions
        .iter()
        .map(|r| {
            let od = r.pair();
            let total = demand.get(&od).map(|f| f.vehicles).unwrap_or(0.0);
            let tourist = tourist_vehicles.get(&od).copied().unwrap_or(0.0);
            let share = if total > 0.0 { (tourist / total).clamp(0.0, 1.0) } else { 0.0 };
            let per_vehicle = share * occupancy.tourist_taxi + (1.0 - share) * occupancy.commuter;
            (r.clone(), r.removed * per_vehicle)
        })
        .collect()
}

/// Extra transit ridership on every directed segment from the plan's
/// removed persons, routed between each pair's nearest stations.
pub fn ridership_deltas(
    transit: &TransitNetwork,
    reductions: &[Reduction],
    demand: &DemandMatrix,
    tourist_vehicles: &BTreeMap<OdPair, f64>,
    occupancy: Occupancy,
) -> Result<Vec<SegmentDelta>> {
    let trips: Vec<(String, String, f64)> = removed_persons(reductions, demand, tourist_vehicles, occupancy)
        .into_iter()
        .map(|(r, persons)| (r.origin_station, r.dest_station, persons))
        .collect();
    transit.load(&trips)
}

/// Parameters of one strategy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyParams {
    #[serde(default = "default_radius")]
    pub radius_km: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_fraction")]
    pub reduction_fraction: f64,
    #[serde(default = "default_mode")]
    pub mode: PlanMode,
}

fn default_radius() -> f64 {
    1.0
}
fn default_top_k() -> usize {
    1000
}
fn default_fraction() -> f64 {
    0.6
}
fn default_mode() -> PlanMode {
    PlanMode::Marginal
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            radius_km: default_radius(),
            top_k: default_top_k(),
            reduction_fraction: default_fraction(),
            mode: default_mode(),
        }
    }
}

impl StrategyParams {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.radius_km.is_finite() && self.radius_km >= 0.0) {
            errs.push(format!("radius_km must be non-negative, got {}", self.radius_km));
        }
        if self.top_k == 0 {
            errs.push("top_k must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.reduction_fraction) {
            errs.push(format!(
                "reduction_fraction must be in [0, 1], got {}",
                self.reduction_fraction
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// A completed strategy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyPlan {
    pub params: StrategyParams,
    pub reductions: Vec<Reduction>,
    pub reassignment: AssignmentResult,
    pub savings: Savings,
    pub ridership: Vec<SegmentDelta>,
}

/// Inputs shared by every strategy evaluation over one event assignment.
pub struct StrategyContext<'a> {
    pub assigner: &'a Assigner<'a>,
    pub zones: &'a [Zone],
    pub transit: &'a TransitNetwork,
    /// Event vehicle demand the `before` result was solved for.
    pub demand: &'a DemandMatrix,
    /// Tourist taxi vehicles per OD pair, a part of `demand`.
    pub tourist_vehicles: &'a BTreeMap<OdPair, f64>,
    pub occupancy: Occupancy,
    /// User equilibrium of `demand`.
    pub before: &'a AssignmentResult,
}

impl StrategyContext<'_> {
    pub fn eligible(&self, radius_km: f64) -> Result<Vec<EligibleOd>> {
        eligible_ods(
            self.assigner.network(),
            self.zones,
            &self.transit.stations(),
            self.before,
            radius_km,
        )
    }

    /// Reductions for `params`. The uniform benchmark removes the same total
    /// as the marginal plan with identical parameters.
    pub fn plan(&self, params: &StrategyParams) -> Result<Vec<Reduction>> {
        params.validate()?;
        let eligible = self.eligible(params.radius_km)?;
        let marginal = plan_marginal(&eligible, params.top_k, params.reduction_fraction)?;
        match params.mode {
            PlanMode::Marginal => Ok(marginal),
            PlanMode::Uniform => plan_uniform(&eligible, total_removed(&marginal)),
        }
    }

    pub fn evaluate(&self, params: &StrategyParams) -> Result<StrategyPlan> {
        let reductions = self.plan(params)?;
        let (reassignment, savings) = apply_and_evaluate(self.assigner, self.demand, self.before, &reductions)?;
        let ridership = ridership_deltas(
            self.transit,
            &reductions,
            self.demand,
            self.tourist_vehicles,
            self.occupancy,
        )?;
        Ok(StrategyPlan {
            params: *params,
            reductions,
            reassignment,
            savings,
            ridership,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn od(o: &str, d: &str, mc: f64, flow: f64) -> EligibleOd {
        EligibleOd {
            origin: o.into(),
            dest: d.into(),
            origin_station: "S1".into(),
            dest_station: "S2".into(),
            mc_p: mc,
            vehicle_flow: flow,
        }
    }

    #[test]
    fn marginal_ranks_by_cost() {
        let e = [od("a", "b", 20.0, 100.0), od("c", "d", 50.0, 100.0)];
        let r = plan_marginal(&e, 1, 0.6).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].origin.as_str(), r[0].removed), ("c", 60.0));
    }

    #[test]
    fn marginal_clamps_top_k() {
        let e = [od("a", "b", 20.0, 100.0), od("c", "d", 50.0, 100.0)];
        assert_eq!(plan_marginal(&e, 10, 0.6).unwrap().len(), 2);
    }

    #[test]
    fn marginal_ties_by_od_key() {
        let e = [od("z", "a", 30.0, 10.0), od("a", "z", 30.0, 10.0), od("a", "b", 30.0, 10.0)];
        let r = plan_marginal(&e, 3, 0.5).unwrap();
        let keys: Vec<String> = r.iter().map(|r| r.pair().to_string()).collect();
        assert_eq!(keys, ["a->b", "a->z", "z->a"]);
    }

    #[test]
    fn uniform_proportional() {
        let e = [od("a", "b", 1.0, 100.0), od("c", "d", 1.0, 300.0)];
        let r = plan_uniform(&e, 40.0).unwrap();
        assert_eq!((r[0].removed, r[1].removed), (10.0, 30.0));
        assert!(plan_uniform(&e, 0.0).unwrap().iter().all(|r| r.removed == 0.0));
        let all = plan_uniform(&e, 400.0).unwrap();
        assert_eq!((all[0].removed, all[1].removed), (100.0, 300.0));
        assert!(plan_uniform(&e, 401.0).is_err());
    }

    #[test]
    fn removed_persons_mixes_occupancy() {
        let demand = DemandMatrix::new(8).with("a", "b", 100.0, 120.0, 80.0);
        let tourists = BTreeMap::from([(OdPair::new("a", "b"), 25.0)]);
        let r = [Reduction::from_eligible(&od("a", "b", 1.0, 100.0), 40.0)];
        let p = removed_persons(&r, &demand, &tourists, Occupancy::default());
        // 40 * (0.25 * 2 + 0.75 * 1)
        assert!((p[0].1 - 50.0).abs() < 1e-12);
    }
}
