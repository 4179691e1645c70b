//! Tourist travel mode split by distance to the nearest rapid-transit station.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::haversine_km;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TravelMode {
    WalkTransit,
    BikeTransit,
    Bus,
    Taxi,
}

impl TravelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TravelMode::WalkTransit => "walk_transit",
            TravelMode::BikeTransit => "bike_transit",
            TravelMode::Bus => "bus",
            TravelMode::Taxi => "taxi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSplitConfig {
    #[serde(default = "default_walk")]
    pub walk_km: f64,
    #[serde(default = "default_bike")]
    pub bike_km: f64,
    #[serde(default = "default_occupancy")]
    pub taxi_occupancy: f64,
    #[serde(default)]
    pub bus_enabled: bool,
    #[serde(default = "default_bus_ratio")]
    pub bus_time_ratio: f64,
}

fn default_walk() -> f64 {
    1.0
}
fn default_bike() -> f64 {
    2.0
}
fn default_occupancy() -> f64 {
    2.0
}
fn default_bus_ratio() -> f64 {
    1.5
}

impl Default for ModeSplitConfig {
    fn default() -> Self {
        ModeSplitConfig {
            walk_km: default_walk(),
            bike_km: default_bike(),
            taxi_occupancy: default_occupancy(),
            bus_enabled: false,
            bus_time_ratio: default_bus_ratio(),
        }
    }
}

impl ModeSplitConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.walk_km > 0.0 && self.walk_km < self.bike_km && self.bike_km.is_finite()) {
            errs.push(format!(
                "mode split requires 0 < walk_km < bike_km, got {} / {}",
                self.walk_km, self.bike_km
            ));
        }
        if !(self.taxi_occupancy.is_finite() && self.taxi_occupancy >= 1.0) {
            errs.push(format!("taxi_occupancy must be >= 1, got {}", self.taxi_occupancy));
        }
        if !(self.bus_time_ratio.is_finite() && self.bus_time_ratio > 0.0) {
            errs.push(format!("bus_time_ratio must be > 0, got {}", self.bus_time_ratio));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// A point a traveller can board rapid transit at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationPoint {
    pub station_id: String,
    pub lat: f64,
    pub lon: f64,
}

/// Time estimates for the bus alternative of one trip, when a bus network
/// is available to the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusEstimate {
    pub bus_minutes: f64,
    pub taxi_minutes: f64,
}

/// Nearest station and its distance in km. `None` when `stations` is empty.
pub fn nearest_station(lat: f64, lon: f64, stations: &[StationPoint]) -> Option<(&StationPoint, f64)> {
    let mut best: Option<(&StationPoint, f64)> = None;
    for s in stations {
        let d = haversine_km(lat, lon, s.lat, s.lon);
        let better = match best {
            None => true,
            Some((b, bd)) => d < bd || (d == bd && s.station_id < b.station_id),
        };
        if better {
            best = Some((s, d));
        }
    }
    best
}

/// Picks the travel mode of a tourist trip from `origin` to `dest`
/// (`(lat, lon)` pairs). `bus` is consulted only when buses are enabled.
pub fn mode_split(
    origin: (f64, f64),
    dest: (f64, f64),
    stations: &[StationPoint],
    config: &ModeSplitConfig,
    bus: Option<BusEstimate>,
) -> Result<TravelMode> {
    let (_, d_origin) = nearest_station(origin.0, origin.1, stations).ok_or_else(|| {
        Error::Validation(vec!["mode split needs at least one station".to_string()])
    })?;
    let (_, d_dest) = nearest_station(dest.0, dest.1, stations).expect("stations is non-empty");
    let farthest = d_origin.max(d_dest);
    if farthest <= config.walk_km {
        return Ok(TravelMode::WalkTransit);
    }
    if farthest <= config.bike_km {
        return Ok(TravelMode::BikeTransit);
    }
    if config.bus_enabled {
        if let Some(b) = bus {
            if b.bus_minutes <= config.bus_time_ratio * b.taxi_minutes {
                return Ok(TravelMode::Bus);
            }
        }
    }
    Ok(TravelMode::Taxi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::km_to_lat_deg;

    fn station(id: &str, lat: f64) -> StationPoint {
        StationPoint {
            station_id: id.into(),
            lat,
            lon: 0.0,
        }
    }

    fn at(km: f64) -> (f64, f64) {
        (km_to_lat_deg(km), 0.0)
    }

    #[test]
    fn thresholds() {
        let st = [station("s", 0.0)];
        let cfg = ModeSplitConfig::default();
        assert_eq!(mode_split(at(0.5), at(-0.5), &st, &cfg, None).unwrap(), TravelMode::WalkTransit);
        assert_eq!(mode_split(at(1.5), at(0.5), &st, &cfg, None).unwrap(), TravelMode::BikeTransit);
        assert_eq!(mode_split(at(5.0), at(5.0), &st, &cfg, None).unwrap(), TravelMode::Taxi);
    }

    #[test]
    fn bus_only_when_enabled() {
        let st = [station("s", 0.0)];
        let est = Some(BusEstimate {
            bus_minutes: 40.0,
            taxi_minutes: 30.0,
        });
        let mut cfg = ModeSplitConfig::default();
        assert_eq!(mode_split(at(5.0), at(5.0), &st, &cfg, est).unwrap(), TravelMode::Taxi);
        cfg.bus_enabled = true;
        assert_eq!(mode_split(at(5.0), at(5.0), &st, &cfg, est).unwrap(), TravelMode::Bus);
        let slow = Some(BusEstimate {
            bus_minutes: 50.0,
            taxi_minutes: 30.0,
        });
        assert_eq!(mode_split(at(5.0), at(5.0), &st, &cfg, slow).unwrap(), TravelMode::Taxi);
        assert_eq!(mode_split(at(5.0), at(5.0), &st, &cfg, None).unwrap(), TravelMode::Taxi);
    }

    #[test]
    fn needs_a_station() {
        assert!(mode_split(at(0.0), at(0.0), &[], &ModeSplitConfig::default(), None).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = ModeSplitConfig {
            walk_km: 3.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
