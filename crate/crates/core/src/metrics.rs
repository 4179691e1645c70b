//! Impact metrics: collective travel time, commuter time increments,
//! average speed and summary distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assign::AssignmentResult;
use crate::demand::{DemandMatrix, OdPair};
use crate::error::{Error, Result};
use crate::network::RoadNetwork;

/// `sum_e v_e t_e`, vehicle-minutes.
pub fn collective_time(result: &AssignmentResult) -> f64 {
    result.total_time()
}

/// The same total computed from path flows: `sum_p f_p * t_p`.
pub fn collective_time_by_paths(result: &AssignmentResult) -> Result<f64> {
    result
        .paths
        .iter()
        .map(|p| Ok(p.flow * result.path_time(&p.path)?))
        .sum()
}

/// Space-mean speed of all vehicles in km/h.
pub fn average_speed(result: &AssignmentResult, network: &RoadNetwork) -> Result<f64> {
    let mut distance = 0.0;
    let mut time = 0.0;
    for l in &result.links {
        let idx = network.link_idx(&l.edge_id).ok_or_else(|| Error::NotFound {
            kind: "edge",
            id: l.edge_id.clone(),
        })?;
        distance += l.volume * network.link(idx).length;
        time += l.volume * l.time;
    }
    if time <= 0.0 {
        return Err(Error::Domain(
            "average speed undefined: no vehicle-time in result".to_string(),
        ));
    }
    // metres per minute to km/h
    Ok(distance / time * 60.0 / 1000.0)
}

/// Commuter-weighted travel time increment between two results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommuterIncrement {
    /// Percent; negative when commuters got faster.
    pub pct: f64,
    /// Percent increment per OD pair with commuters.
    #[serde(with = "crate::demand::od_keyed")]
    pub per_od: BTreeMap<OdPair, f64>,
}

/// Average percentage increment of commuter travel time:
/// `sum (t_during - t_before) f / sum t_before f * 100` over OD pairs with
/// commuters.
pub fn commuter_increment(
    before: &AssignmentResult,
    during: &AssignmentResult,
    demand: &DemandMatrix,
) -> Result<CommuterIncrement> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut per_od = BTreeMap::new();
    let mut missing = Vec::new();
    for (od, f) in &demand.flows {
        if f.commuters <= 0.0 {
            continue;
        }
        let (b, d) = match (before.od_time(od), during.od_time(od)) {
            (Some(b), Some(d)) => (b.time, d.time),
            (b, d) => {
                if b.is_none() {
                    missing.push(format!("{od} missing from {} result", before.scenario));
                }
                if d.is_none() {
                    missing.push(format!("{od} missing from {} result", during.scenario));
                }
                continue;
            }
        };
        num += (d - b) * f.commuters;
        den += b * f.commuters;
        let pct = if b > 0.0 { (d - b) / b * 100.0 } else { 0.0 };
        per_od.insert(od.clone(), pct);
    }
    if !missing.is_empty() {
        return Err(Error::Validation(missing));
    }
    let pct = if den > 0.0 { num / den * 100.0 } else { 0.0 };
    Ok(CommuterIncrement { pct, per_od })
}

/// Commuter-weighted mean of per-OD increments, by origin and by destination zone.
pub fn zone_increments(
    per_od: &BTreeMap<OdPair, f64>,
    demand: &DemandMatrix,
) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let mut by_origin: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    let mut by_dest: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (od, pct) in per_od {
        let w = demand.get(od).map(|f| f.commuters).unwrap_or(0.0);
        if w <= 0.0 {
            continue;
        }
        let o = by_origin.entry(od.origin.clone()).or_default();
        o.0 += pct * w;
        o.1 += w;
        let d = by_dest.entry(od.dest.clone()).or_default();
        d.0 += pct * w;
        d.1 += w;
    }
    let finish = |m: BTreeMap<String, (f64, f64)>| m.into_iter().map(|(k, (s, w))| (k, s / w)).collect();
    (finish(by_origin), finish(by_dest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub count: usize,
    /// `log10(count)`, zero for empty bins.
    pub log_count: f64,
}

/// Five-number summary, mean and histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    pub bin_width: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Quantile by linear interpolation between order statistics of `sorted`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn distribution(values: &[f64], bin_width: f64) -> Result<Distribution> {
    if values.is_empty() {
        return Err(Error::Domain("distribution of an empty sample".to_string()));
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::Domain(format!("bin width must be positive, got {bin_width}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("distribution of non-finite values".to_string()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let start = (min / bin_width).floor() as i64;
    let end = (max / bin_width).floor() as i64;
    let mut counts = vec![0usize; (end - start + 1) as usize];
    for v in &sorted {
        let b = (v / bin_width).floor() as i64 - start;
        counts[b as usize] += 1;
    }
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lower: (start + i as i64) as f64 * bin_width,
            count,
            log_count: if count > 0 { (count as f64).log10() } else { 0.0 },
        })
        .collect();
    Ok(Distribution {
        min,
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max,
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        count: sorted.len(),
        bin_width,
        histogram,
    })
}

/// Everything reported for one event scenario against the pre-event baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub scenario: String,
    /// Vehicle-minutes.
    pub collective_time: f64,
    /// km/h.
    pub avg_speed: f64,
    pub commuter_increment_pct: f64,
    pub per_od_increments: BTreeMap<String, f64>,
    pub origin_zone_increments: BTreeMap<String, f64>,
    pub dest_zone_increments: BTreeMap<String, f64>,
    pub tourist_time_stats: Option<Distribution>,
    pub commuter_increment_stats: Option<Distribution>,
}

/// Builds the impact report of `during` against `before`. Tourist travel
/// times are taken over the OD pairs in `tourist_pairs`.
pub fn impact_report(
    before: &AssignmentResult,
    during: &AssignmentResult,
    demand: &DemandMatrix,
    tourist_pairs: &[OdPair],
    network: &RoadNetwork,
    bin_width: f64,
) -> Result<ImpactReport> {
    let inc = commuter_increment(before, during, demand)?;
    let (origin_zone_increments, dest_zone_increments) = zone_increments(&inc.per_od, demand);
    let tourist_times: Vec<f64> = tourist_pairs
        .iter()
        .filter_map(|od| during.od_time(od).map(|t| t.time))
        .collect();
    let increments: Vec<f64> = inc.per_od.values().copied().collect();
    Ok(ImpactReport {
        scenario: during.scenario.to_string(),
        collective_time: collective_time(during),
        avg_speed: average_speed(during, network)?,
        commuter_increment_pct: inc.pct,
        per_od_increments: inc.per_od.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        origin_zone_increments,
        dest_zone_increments,
        tourist_time_stats: if tourist_times.is_empty() {
            None
        } else {
            Some(distribution(&tourist_times, bin_width)?)
        },
        commuter_increment_stats: if increments.is_empty() {
            None
        } else {
            Some(distribution(&increments, bin_width)?)
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles() {
        let d = distribution(&[5.0, 5.0, 5.0], 1.0).unwrap();
        assert_eq!((d.min, d.q1, d.median, d.q3, d.max), (5.0, 5.0, 5.0, 5.0, 5.0));
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        let d = distribution(&v, 1.0).unwrap();
        assert_eq!((d.q1, d.median, d.q3, d.mean), (3.0, 5.0, 7.0, 5.0));
        assert_eq!(d.histogram.len(), 9);
    }

    #[test]
    fn log_counts() {
        let d = distribution(&vec![12.5; 1000], 5.0).unwrap();
        assert_eq!(d.histogram.len(), 1);
        assert_eq!(d.histogram[0].count, 1000);
        assert_eq!(d.histogram[0].lower, 10.0);
        assert!((d.histogram[0].log_count - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_distribution_rejected() {
        assert!(distribution(&[], 1.0).is_err());
    }

    #[test]
    fn negative_values_binned() {
        let d = distribution(&[-2.5, 0.0, 2.5], 5.0).unwrap();
        assert_eq!(d.histogram.len(), 2);
        assert_eq!(d.histogram[0].lower, -5.0);
        assert_eq!(d.histogram[0].count, 1);
        assert_eq!(d.histogram[1].count, 2);
    }
}
