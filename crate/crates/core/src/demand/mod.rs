//! Origin-destination demand: baseline matrices, event (tourist) demand
//! generation and their combination.

mod event;
mod mode;
mod tourist;

pub use event::*;
pub use mode::*;
pub use tourist::*;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Traffic analysis zone with its network attachment node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub zone_id: String,
    pub lat: f64,
    pub lon: f64,
    pub attach_node: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OdPair {
    pub origin: String,
    pub dest: String,
}

impl OdPair {
    pub fn new(origin: impl Into<String>, dest: impl Into<String>) -> Self {
        OdPair {
            origin: origin.into(),
            dest: dest.into(),
        }
    }
}

impl fmt::Display for OdPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.origin, self.dest)
    }
}

/// Serde adapter writing an OD-keyed map as a list of
/// `{origin, dest, value}` entries, since JSON keys must be strings.
pub mod od_keyed {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::OdPair;

    #[derive(Serialize)]
    struct EntryRef<'a, V> {
        origin: &'a str,
        dest: &'a str,
        value: &'a V,
    }

    #[derive(Deserialize)]
    struct Entry<V> {
        origin: String,
        dest: String,
        value: V,
    }

    pub fn serialize<V: Serialize, S: Serializer>(map: &BTreeMap<OdPair, V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(od, value)| EntryRef {
            origin: &od.origin,
            dest: &od.dest,
            value,
        }))
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<OdPair, V>, D::Error> {
        let entries: Vec<Entry<V>> = Vec::deserialize(d)?;
        Ok(entries
            .into_iter()
            .map(|e| (OdPair::new(e.origin, e.dest), e.value))
            .collect())
    }
}

/// Flows of one OD pair for one hour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OdFlows {
    pub vehicles: f64,
    pub persons: f64,
    /// Commuting persons, a subset of `persons`.
    pub commuters: f64,
}

/// One row of a demand file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdRecord {
    pub hour: u8,
    #[serde(rename = "origin_zone")]
    pub origin: String,
    #[serde(rename = "dest_zone")]
    pub dest: String,
    pub vehicle_flow: f64,
    pub person_flow: f64,
    pub commuter_persons: f64,
}

impl OdRecord {
    pub fn pair(&self) -> OdPair {
        OdPair::new(self.origin.clone(), self.dest.clone())
    }

    pub fn flows(&self) -> OdFlows {
        OdFlows {
            vehicles: self.vehicle_flow,
            persons: self.person_flow,
            commuters: self.commuter_persons,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.hour > 23 {
            return Err(format!("hour {} outside 0-23", self.hour));
        }
        for (name, v) in [
            ("vehicle_flow", self.vehicle_flow),
            ("person_flow", self.person_flow),
            ("commuter_persons", self.commuter_persons),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.commuter_persons > self.person_flow {
            return Err(format!(
                "commuter_persons {} exceeds person_flow {}",
                self.commuter_persons, self.person_flow
            ));
        }
        Ok(())
    }
}

/// Vehicle and person demand for one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandMatrix {
    pub hour: u8,
    /// Weekday multiplier already folded into the flows.
    pub day_scale: f64,
    #[serde(with = "od_keyed")]
    pub flows: BTreeMap<OdPair, OdFlows>,
}

impl DemandMatrix {
    pub fn new(hour: u8) -> Self {
        DemandMatrix {
            hour,
            day_scale: 1.0,
            flows: BTreeMap::new(),
        }
    }

    /// Adds or replaces an OD entry (builder-style, flows taken as given).
    pub fn with(mut self, origin: &str, dest: &str, vehicles: f64, persons: f64, commuters: f64) -> Self {
        self.flows.insert(
            OdPair::new(origin, dest),
            OdFlows {
                vehicles,
                persons,
                commuters,
            },
        );
        self
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn get(&self, od: &OdPair) -> Option<&OdFlows> {
        self.flows.get(od)
    }

    pub fn total_vehicles(&self) -> f64 {
        self.flows.values().map(|f| f.vehicles).sum()
    }

    pub fn records(&self) -> impl Iterator<Item = OdRecord> + '_ {
        self.flows.iter().map(|(od, f)| OdRecord {
            hour: self.hour,
            origin: od.origin.clone(),
            dest: od.dest.clone(),
            vehicle_flow: f.vehicles,
            person_flow: f.persons,
            commuter_persons: f.commuters,
        })
    }

    /// Vehicle demand scaled by `factor`, other flows untouched.
    pub fn scaled_vehicles(&self, factor: f64) -> DemandMatrix {
        let mut out = self.clone();
        for f in out.flows.values_mut() {
            f.vehicles *= factor;
        }
        out
    }

    /// Removes `reductions` vehicles per OD, never going below zero.
    pub fn reduced(&self, reductions: &BTreeMap<OdPair, f64>) -> Result<DemandMatrix> {
        let mut out = self.clone();
        for (od, r) in reductions {
            let f = out.flows.get_mut(od).ok_or_else(|| Error::NotFound {
                kind: "OD pair",
                id: od.to_string(),
            })?;
            if *r > f.vehicles * (1.0 + 1e-12) || *r < 0.0 {
                return Err(Error::Validation(vec![format!(
                    "reduction {r} on {od} exceeds its flow {}",
                    f.vehicles
                )]));
            }
            f.vehicles = (f.vehicles - r).max(0.0);
        }
        Ok(out)
    }
}

/// Demand matrices keyed by hour.
pub type HourlyDemand = BTreeMap<u8, DemandMatrix>;

/// Loads a demand file, multiplying every flow by `day_scale`.
pub fn load_demand(path: &Path, day_scale: f64) -> Result<HourlyDemand> {
    if !(day_scale.is_finite() && day_scale > 0.0) {
        return Err(Error::Validation(vec![format!(
            "day_scale must be positive, got {day_scale}"
        )]));
    }
    let rows = io::read_rows::<OdRecord>(
        path,
        &[
            "hour",
            "origin_zone",
            "dest_zone",
            "vehicle_flow",
            "person_flow",
            "commuter_persons",
        ],
    )?;
    let mut out = HourlyDemand::new();
    for (line, r) in rows {
        r.check()
            .map_err(|m| Error::format(path, format!("line {line}: {m}")))?;
        let m = out.entry(r.hour).or_insert_with(|| DemandMatrix {
            hour: r.hour,
            day_scale,
            flows: BTreeMap::new(),
        });
        let flows = OdFlows {
            vehicles: r.vehicle_flow * day_scale,
            persons: r.person_flow * day_scale,
            commuters: r.commuter_persons * day_scale,
        };
        if m.flows.insert(r.pair(), flows).is_some() {
            return Err(Error::format(
                path,
                format!(
                    "line {line}: duplicate OD row (hour {}, {} -> {})",
                    r.hour, r.origin, r.dest
                ),
            ));
        }
    }
    Ok(out)
}

pub fn write_demand<'a>(path: &Path, matrices: impl IntoIterator<Item = &'a DemandMatrix>) -> Result<()> {
    let mut w = io::writer(path)?;
    io::write_record(
        path,
        &mut w,
        [
            "hour",
            "origin_zone",
            "dest_zone",
            "vehicle_flow",
            "person_flow",
            "commuter_persons",
        ],
    )?;
    for m in matrices {
        for r in m.records() {
            io::write_record(
                path,
                &mut w,
                [
                    r.hour.to_string(),
                    r.origin,
                    r.dest,
                    r.vehicle_flow.to_string(),
                    r.person_flow.to_string(),
                    r.commuter_persons.to_string(),
                ],
            )?;
        }
    }
    io::flush(path, w)
}

#[derive(Deserialize)]
struct ZoneRow {
    zone_id: String,
    lat: f64,
    lon: f64,
    attach_node: String,
}

pub fn load_zones(path: &Path) -> Result<Vec<Zone>> {
    let rows = io::read_rows::<ZoneRow>(path, &["zone_id", "lat", "lon", "attach_node"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if !seen.insert(r.zone_id.clone()) {
            return Err(Error::format(
                path,
                format!("line {line}: duplicate zone_id `{}`", r.zone_id),
            ));
        }
        out.push(Zone {
            zone_id: r.zone_id,
            lat: r.lat,
            lon: r.lon,
            attach_node: r.attach_node,
        });
    }
    Ok(out)
}

pub fn write_zones(path: &Path, zones: &[Zone]) -> Result<()> {
    let mut w = io::writer(path)?;
    io::write_record(path, &mut w, ["zone_id", "lat", "lon", "attach_node"])?;
    for z in zones {
        io::write_record(
            path,
            &mut w,
            [
                z.zone_id.clone(),
                z.lat.to_string(),
                z.lon.to_string(),
                z.attach_node.clone(),
            ],
        )?;
    }
    io::flush(path, w)
}

/// Adds event vehicle and person flows to the baseline. Commuter counts stay
/// those of the baseline: tourists are never commuters.
pub fn combine(base: &DemandMatrix, additions: &[OdRecord]) -> Result<DemandMatrix> {
    let mut out = base.clone();
    for a in additions {
        if a.hour != base.hour {
            return Err(Error::Validation(vec![format!(
                "event addition for hour {} cannot be combined with hour {} demand",
                a.hour, base.hour
            )]));
        }
        let f = out.flows.entry(a.pair()).or_default();
        f.vehicles += a.vehicle_flow;
        f.persons += a.person_flow;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "hour,origin_zone,dest_zone,vehicle_flow,person_flow,commuter_persons\n";

    fn write(body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("demand.csv");
        std::fs::write(&p, format!("{HEADER}{body}")).unwrap();
        (dir, p)
    }

    #[test]
    fn empty_body_loads_empty() {
        let (_d, p) = write("");
        assert!(load_demand(&p, 1.0).unwrap().is_empty());
    }

    #[test]
    fn day_scale_applied_once() {
        let (_d, p) = write("8,a,b,100,120,60\n");
        let m = load_demand(&p, 1.1).unwrap();
        let f = m[&8].get(&OdPair::new("a", "b")).unwrap();
        assert!((f.vehicles - 110.0).abs() < 1e-9);
        assert!((f.commuters - 66.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_key_rejected() {
        let (_d, p) = write("8,a,b,100,120,60\n8,a,b,1,1,1\n");
        let msg = load_demand(&p, 1.0).unwrap_err().to_string();
        assert!(msg.contains("duplicate") && msg.contains("a -> b"), "{msg}");
    }

    #[test]
    fn negative_and_inconsistent_rows_rejected() {
        let (_d, p) = write("8,a,b,-1,120,60\n");
        assert!(load_demand(&p, 1.0).is_err());
        let (_d, p) = write("8,a,b,1,10,60\n");
        assert!(load_demand(&p, 1.0).is_err());
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "h,o,d\n1,2,3\n").unwrap();
        assert!(matches!(load_demand(&p, 1.0), Err(Error::Format { .. })));
    }

    fn add(origin: &str, dest: &str, v: f64) -> OdRecord {
        OdRecord {
            hour: 8,
            origin: origin.into(),
            dest: dest.into(),
            vehicle_flow: v,
            person_flow: 2.0 * v,
            commuter_persons: 0.0,
        }
    }

    #[test]
    fn combine_cases() {
        let base = DemandMatrix::new(8).with("a", "b", 100.0, 100.0, 80.0);
        assert_eq!(combine(&base, &[]).unwrap(), base);

        let c = combine(&base, &[add("a", "b", 10.0)]).unwrap();
        let f = c.get(&OdPair::new("a", "b")).unwrap();
        assert_eq!(f.vehicles, 110.0);
        assert_eq!(f.persons, 120.0);
        assert_eq!(f.commuters, 80.0);

        let c = combine(&base, &[add("c", "b", 5.0)]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.total_vehicles(), 105.0);

        let mut wrong = add("a", "b", 1.0);
        wrong.hour = 9;
        assert!(combine(&base, &[wrong]).is_err());
    }
}
