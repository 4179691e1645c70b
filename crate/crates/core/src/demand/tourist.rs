//! Tourist trips from residences to venues turned into OD demand.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{
    assign_origins, mode_split, spectators_per_hour, DepartureSplit, EventSession, ModeSplitConfig,
    OdPair, OdRecord, Residence, StationPoint, TravelMode, Venue, Zone,
};
use crate::error::{Error, Result};
use crate::geo::haversine_km;

/// Points farther than this from every zone centroid are still snapped to the
/// nearest one, but counted as outside the zoning.
pub const DEFAULT_ZONE_SNAP_KM: f64 = 3.0;

/// Nearest zone to a point and its distance in km.
pub fn nearest_zone(lat: f64, lon: f64, zones: &[Zone]) -> Option<(&Zone, f64)> {
    let mut best: Option<(&Zone, f64)> = None;
    for z in zones {
        let d = haversine_km(lat, lon, z.lat, z.lon);
        let better = match best {
            None => true,
            Some((b, bd)) => d < bd || (d == bd && z.zone_id < b.zone_id),
        };
        if better {
            best = Some((z, d));
        }
    }
    best
}

/// Tourist transit person flow between two zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitFlow {
    pub origin: String,
    pub dest: String,
    pub mode: TravelMode,
    pub persons: f64,
}

/// Event demand for one hour.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TouristDemand {
    pub hour: u8,
    /// Taxi trips as vehicle additions (`commuter_persons` is always zero).
    pub vehicles: Vec<OdRecord>,
    pub transit: Vec<TransitFlow>,
    /// Residences or venues snapped to a zone farther than the snap radius.
    pub far_snaps: usize,
}

impl TouristDemand {
    pub fn total_vehicles(&self) -> f64 {
        self.vehicles.iter().map(|r| r.vehicle_flow).sum()
    }

    pub fn vehicle_flows(&self) -> BTreeMap<OdPair, f64> {
        self.vehicles.iter().map(|r| (r.pair(), r.vehicle_flow)).collect()
    }

    fn absorb(&mut self, other: TouristDemand) {
        let mut veh: BTreeMap<OdPair, (f64, f64)> = self
            .vehicles
            .drain(..)
            .map(|r| (r.pair(), (r.vehicle_flow, r.person_flow)))
            .collect();
        for r in other.vehicles {
            let e = veh.entry(r.pair()).or_insert((0.0, 0.0));
            e.0 += r.vehicle_flow;
            e.1 += r.person_flow;
        }
        let hour = self.hour;
        self.vehicles = veh
            .into_iter()
            .map(|(od, (v, p))| OdRecord {
                hour,
                origin: od.origin,
                dest: od.dest,
                vehicle_flow: v,
                person_flow: p,
                commuter_persons: 0.0,
            })
            .collect();
        let mut tr: BTreeMap<(String, String, TravelMode), f64> = self
            .transit
            .drain(..)
            .map(|t| ((t.origin, t.dest, t.mode), t.persons))
            .collect();
        for t in other.transit {
            *tr.entry((t.origin, t.dest, t.mode)).or_insert(0.0) += t.persons;
        }
        self.transit = tr
            .into_iter()
            .map(|((origin, dest, mode), persons)| TransitFlow {
                origin,
                dest,
                mode,
                persons,
            })
            .collect();
        self.far_snaps += other.far_snaps;
    }
}

/// Mode of every residence's trip to `venue`.
pub fn residence_modes(
    venue: &Venue,
    residences: &[Residence],
    stations: &[StationPoint],
    config: &ModeSplitConfig,
) -> Result<BTreeMap<String, TravelMode>> {
    residences
        .iter()
        .map(|r| {
            mode_split((r.lat, r.lon), (venue.lat, venue.lon), stations, config, None)
                .map(|m| (r.residence_id.clone(), m))
        })
        .collect()
}

/// Converts one hour's departures to `venue`, split by residence, into taxi
/// vehicle demand and transit person flows.
pub fn tourist_vehicle_demand(
    hour: u8,
    venue: &Venue,
    departures: &BTreeMap<String, f64>,
    residences: &[Residence],
    modes: &BTreeMap<String, TravelMode>,
    zones: &[Zone],
    config: &ModeSplitConfig,
) -> Result<TouristDemand> {
    let by_id: BTreeMap<&str, &Residence> =
        residences.iter().map(|r| (r.residence_id.as_str(), r)).collect();
    let mut far_snaps = 0;
    let (venue_zone, d) = nearest_zone(venue.lat, venue.lon, zones)
        .ok_or_else(|| Error::Validation(vec!["no zones to map tourist trips onto".to_string()]))?;
    if d > DEFAULT_ZONE_SNAP_KM {
        far_snaps += 1;
    }
    let mut taxi: BTreeMap<OdPair, f64> = BTreeMap::new();
    let mut transit: BTreeMap<(String, String, TravelMode), f64> = BTreeMap::new();
    for (rid, persons) in departures {
        if *persons <= 0.0 {
            continue;
        }
        let r = by_id.get(rid.as_str()).ok_or_else(|| Error::NotFound {
            kind: "residence",
            id: rid.clone(),
        })?;
        let mode = *modes.get(rid).ok_or_else(|| Error::NotFound {
            kind: "residence mode",
            id: rid.clone(),
        })?;
        let (zone, d) = nearest_zone(r.lat, r.lon, zones).expect("zones is non-empty");
        if d > DEFAULT_ZONE_SNAP_KM {
            far_snaps += 1;
        }
        if mode == TravelMode::Taxi {
            *taxi
                .entry(OdPair::new(zone.zone_id.clone(), venue_zone.zone_id.clone()))
                .or_insert(0.0) += persons;
        } else {
            *transit
                .entry((zone.zone_id.clone(), venue_zone.zone_id.clone(), mode))
                .or_insert(0.0) += persons;
        }
    }
    if far_snaps > 0 {
        warn!("{far_snaps} tourist endpoint(s) lie outside every zone; snapped to nearest centroid");
    }
    Ok(TouristDemand {
        vehicles: taxi
            .into_iter()
            .map(|(od, persons)| OdRecord {
                hour,
                origin: od.origin,
                dest: od.dest,
                vehicle_flow: persons / config.taxi_occupancy,
                person_flow: persons,
                commuter_persons: 0.0,
            })
            .collect(),
        transit: transit
            .into_iter()
            .map(|((origin, dest, mode), persons)| TransitFlow {
                origin,
                dest,
                mode,
                persons,
            })
            .collect(),
        far_snaps,
        hour,
    })
}

/// Inputs of the tourist demand generator.
pub struct EventInputs<'a> {
    pub venues: &'a [Venue],
    pub sessions: &'a [EventSession],
    pub residences: &'a [Residence],
    pub zones: &'a [Zone],
    pub stations: &'a [StationPoint],
    pub split: &'a DepartureSplit,
    pub modes: &'a ModeSplitConfig,
}

/// All tourist demand departing during `hour` of `date`.
pub fn generate_event_demand(inputs: &EventInputs<'_>, date: &str, hour: u8) -> Result<TouristDemand> {
    let departures = spectators_per_hour(inputs.sessions, inputs.split).at(date, hour);
    let mut out = TouristDemand {
        hour,
        ..Default::default()
    };
    for (venue_id, persons) in departures {
        let venue = inputs
            .venues
            .iter()
            .find(|v| v.venue_id == venue_id)
            .ok_or_else(|| Error::NotFound {
                kind: "venue",
                id: venue_id.clone(),
            })?;
        let by_residence = assign_origins(persons, inputs.residences)?;
        let modes = residence_modes(venue, inputs.residences, inputs.stations, inputs.modes)?;
        let part = tourist_vehicle_demand(
            hour,
            venue,
            &by_residence,
            inputs.residences,
            &modes,
            inputs.zones,
            inputs.modes,
        )?;
        out.absorb(part);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::ResidenceKind;
    use crate::geo::km_to_lat_deg;

    fn zone(id: &str, km: f64) -> Zone {
        Zone {
            zone_id: id.into(),
            lat: km_to_lat_deg(km),
            lon: 0.0,
            attach_node: id.into(),
        }
    }

    fn residence(id: &str, km: f64) -> Residence {
        Residence {
            residence_id: id.into(),
            lat: km_to_lat_deg(km),
            lon: 0.0,
            accommodates: 10.0,
            kind: ResidenceKind::Airbnb,
        }
    }

    fn venue() -> Venue {
        Venue {
            venue_id: "v".into(),
            lat: km_to_lat_deg(10.0),
            lon: 0.0,
            capacity: 1000.0,
        }
    }

    fn run(persons: f64, mode: TravelMode) -> TouristDemand {
        let zones = [zone("z0", 0.0), zone("z10", 10.0)];
        let res = [residence("r", 0.2)];
        let dep = BTreeMap::from([("r".to_string(), persons)]);
        let modes = BTreeMap::from([("r".to_string(), mode)]);
        tourist_vehicle_demand(8, &venue(), &dep, &res, &modes, &zones, &ModeSplitConfig::default())
            .unwrap()
    }

    #[test]
    fn taxi_occupancy_applied() {
        let d = run(20.0, TravelMode::Taxi);
        assert_eq!(d.vehicles.len(), 1);
        assert_eq!(d.vehicles[0].vehicle_flow, 10.0);
        assert_eq!(d.vehicles[0].origin, "z0");
        assert_eq!(d.vehicles[0].dest, "z10");
        assert_eq!(d.vehicles[0].commuter_persons, 0.0);
        assert_eq!(run(15.0, TravelMode::Taxi).vehicles[0].vehicle_flow, 7.5);
    }

    #[test]
    fn no_taxi_no_records() {
        assert!(run(0.0, TravelMode::Taxi).vehicles.is_empty());
        let d = run(20.0, TravelMode::WalkTransit);
        assert!(d.vehicles.is_empty());
        assert_eq!(d.transit.len(), 1);
        assert_eq!(d.transit[0].persons, 20.0);
    }

    #[test]
    fn far_points_snap_with_warning() {
        let zones = [zone("z0", 0.0), zone("z10", 10.0)];
        let res = [residence("r", -8.0)];
        let dep = BTreeMap::from([("r".to_string(), 4.0)]);
        let modes = BTreeMap::from([("r".to_string(), TravelMode::Taxi)]);
        let d = tourist_vehicle_demand(8, &venue(), &dep, &res, &modes, &zones, &ModeSplitConfig::default())
            .unwrap();
        assert_eq!(d.far_snaps, 1);
        assert_eq!(d.vehicles[0].origin, "z0");
    }
}
