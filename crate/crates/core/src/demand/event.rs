//! Spectator demand: venues, sessions, residences and departure timing.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Venue {
    pub venue_id: String,
    pub lat: f64,
    pub lon: f64,
    /// Seats.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSession {
    pub venue_id: String,
    pub date: String,
    pub start_hour: u8,
    pub expected_attendance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidenceKind {
    Airbnb,
    Hotel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residence {
    pub residence_id: String,
    pub lat: f64,
    pub lon: f64,
    pub accommodates: f64,
    pub kind: ResidenceKind,
}

/// Share of spectators leaving `hours_ahead` hours before a session starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepartureShare {
    pub hours_ahead: u8,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DepartureSplit {
    pub shares: Vec<DepartureShare>,
}

impl Default for DepartureSplit {
    fn default() -> Self {
        DepartureSplit {
            shares: vec![
                DepartureShare {
                    hours_ahead: 1,
                    fraction: 0.30,
                },
                DepartureShare {
                    hours_ahead: 2,
                    fraction: 0.40,
                },
                DepartureShare {
                    hours_ahead: 3,
                    fraction: 0.30,
                },
            ],
        }
    }
}

impl DepartureSplit {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.shares.is_empty() {
            errs.push("departure split has no shares".to_string());
        }
        for s in &self.shares {
            if s.hours_ahead == 0 {
                errs.push("departure share hours_ahead must be positive".to_string());
            }
            if !(0.0..=1.0).contains(&s.fraction) {
                errs.push(format!("departure fraction {} outside [0, 1]", s.fraction));
            }
        }
        let total: f64 = self.shares.iter().map(|s| s.fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            errs.push(format!("departure fractions sum to {total}, expected 1"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Departure bin: spectators leaving for `venue_id` during `hour` of `date`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DepartureSlot {
    pub date: String,
    pub hour: u8,
    pub venue_id: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectatorDepartures {
    pub bins: BTreeMap<DepartureSlot, f64>,
    /// Shares that would have departed before midnight and were clamped to hour 0.
    pub clamped: usize,
}

impl SpectatorDepartures {
    pub fn total(&self) -> f64 {
        self.bins.values().sum()
    }

    /// Departures per venue during one hour.
    pub fn at(&self, date: &str, hour: u8) -> BTreeMap<String, f64> {
        self.bins
            .iter()
            .filter(|(k, _)| k.date == date && k.hour == hour)
            .map(|(k, v)| (k.venue_id.clone(), *v))
            .collect()
    }
}

/// Spreads each session's attendance over the hours before it starts.
pub fn spectators_per_hour(sessions: &[EventSession], split: &DepartureSplit) -> SpectatorDepartures {
    let mut out = SpectatorDepartures::default();
    for s in sessions {
        for share in &split.shares {
            let hour = match s.start_hour.checked_sub(share.hours_ahead) {
                Some(h) => h,
                None => {
                    out.clamped += 1;
                    0
                }
            };
            let slot = DepartureSlot {
                date: s.date.clone(),
                hour,
                venue_id: s.venue_id.clone(),
            };
            *out.bins.entry(slot).or_insert(0.0) += s.expected_attendance * share.fraction;
        }
    }
    if out.clamped > 0 {
        warn!("{} departure share(s) clamped to hour 0", out.clamped);
    }
    out
}

/// Apportions departures to residences in proportion to their capacity.
pub fn assign_origins(departures: f64, residences: &[Residence]) -> Result<BTreeMap<String, f64>> {
    if residences.is_empty() {
        return Err(Error::Validation(vec![
            "cannot assign spectators: no residences".to_string(),
        ]));
    }
    let total: f64 = residences.iter().map(|r| r.accommodates).sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Validation(vec![format!(
            "total residence capacity must be positive, got {total}"
        )]));
    }
    let mut out = BTreeMap::new();
    for r in residences {
        *out.entry(r.residence_id.clone()).or_insert(0.0) += departures * r.accommodates / total;
    }
    Ok(out)
}

pub fn load_venues(path: &Path) -> Result<Vec<Venue>> {
    let rows = io::read_rows::<Venue>(path, &["venue_id", "lat", "lon", "capacity"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, v) in rows {
        if !seen.insert(v.venue_id.clone()) {
            return Err(Error::format(path, format!("line {line}: duplicate venue `{}`", v.venue_id)));
        }
        if !(v.capacity.is_finite() && v.capacity > 0.0) {
            return Err(Error::format(path, format!("line {line}: venue capacity must be > 0")));
        }
        out.push(v);
    }
    Ok(out)
}

/// Sessions with their file line numbers, so cross-file checks can cite them.
pub fn load_sessions_with_lines(path: &Path) -> Result<Vec<(u64, EventSession)>> {
    let rows = io::read_rows::<EventSession>(
        path,
        &["venue_id", "date", "start_hour", "expected_attendance"],
    )?;
    for (line, s) in &rows {
        if s.start_hour > 23 {
            return Err(Error::format(path, format!("line {line}: start_hour outside 0-23")));
        }
        if !(s.expected_attendance.is_finite() && s.expected_attendance >= 0.0) {
            return Err(Error::format(
                path,
                format!("line {line}: expected_attendance must be non-negative"),
            ));
        }
    }
    Ok(rows)
}

pub fn load_sessions(path: &Path) -> Result<Vec<EventSession>> {
    Ok(load_sessions_with_lines(path)?.into_iter().map(|(_, s)| s).collect())
}

pub fn load_residences(path: &Path) -> Result<Vec<Residence>> {
    let rows = io::read_rows::<Residence>(
        path,
        &["residence_id", "lat", "lon", "accommodates", "kind"],
    )?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, r) in rows {
        if !seen.insert(r.residence_id.clone()) {
            return Err(Error::format(
                path,
                format!("line {line}: duplicate residence `{}`", r.residence_id),
            ));
        }
        if !(r.accommodates.is_finite() && r.accommodates > 0.0) {
            return Err(Error::format(path, format!("line {line}: accommodates must be > 0")));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn write_venues(path: &Path, venues: &[Venue]) -> Result<()> {
    let mut w = io::writer(path)?;
    io::write_record(path, &mut w, ["venue_id", "lat", "lon", "capacity"])?;
    for v in venues {
        io::write_record(
            path,
            &mut w,
            [v.venue_id.clone(), v.lat.to_string(), v.lon.to_string(), v.capacity.to_string()],
        )?;
    }
    io::flush(path, w)
}

pub fn write_sessions(path: &Path, sessions: &[EventSession]) -> Result<()> {
    let mut w = io::writer(path)?;
    io::write_record(path, &mut w, ["venue_id", "date", "start_hour", "expected_attendance"])?;
    for s in sessions {
        io::write_record(
            path,
            &mut w,
            [
                s.venue_id.clone(),
                s.date.clone(),
                s.start_hour.to_string(),
                s.expected_attendance.to_string(),
            ],
        )?;
    }
    io::flush(path, w)
}

pub fn write_residences(path: &Path, residences: &[Residence]) -> Result<()> {
    let mut w = io::writer(path)?;
    io::write_record(path, &mut w, ["residence_id", "lat", "lon", "accommodates", "kind"])?;
    for r in residences {
        let kind = match r.kind {
            ResidenceKind::Airbnb => "airbnb",
            ResidenceKind::Hotel => "hotel",
        };
        io::write_record(
            path,
            &mut w,
            [
                r.residence_id.clone(),
                r.lat.to_string(),
                r.lon.to_string(),
                r.accommodates.to_string(),
                kind.to_string(),
            ],
        )?;
    }
    io::flush(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(venue: &str, start: u8, n: f64) -> EventSession {
        EventSession {
            venue_id: venue.into(),
            date: "2016-08-08".into(),
            start_hour: start,
            expected_attendance: n,
        }
    }

    fn slot(hour: u8, venue: &str) -> DepartureSlot {
        DepartureSlot {
            date: "2016-08-08".into(),
            hour,
            venue_id: venue.into(),
        }
    }

    fn res(id: &str, cap: f64) -> Residence {
        Residence {
            residence_id: id.into(),
            lat: 0.0,
            lon: 0.0,
            accommodates: cap,
            kind: ResidenceKind::Hotel,
        }
    }

    #[test]
    fn default_split_is_valid() {
        DepartureSplit::default().validate().unwrap();
        let bad = DepartureSplit {
            shares: vec![DepartureShare {
                hours_ahead: 1,
                fraction: 0.9,
            }],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_session_split() {
        let d = spectators_per_hour(&[session("v", 18, 1000.0)], &DepartureSplit::default());
        assert_eq!(d.bins.len(), 3);
        assert_eq!(d.bins[&slot(17, "v")], 300.0);
        assert_eq!(d.bins[&slot(16, "v")], 400.0);
        assert_eq!(d.bins[&slot(15, "v")], 300.0);
        assert_eq!(d.clamped, 0);
    }

    #[test]
    fn empty_sessions() {
        let d = spectators_per_hour(&[], &DepartureSplit::default());
        assert!(d.bins.is_empty());
    }

    #[test]
    fn overlapping_sessions_sum() {
        let d = spectators_per_hour(
            &[session("v", 18, 1000.0), session("v", 19, 1000.0)],
            &DepartureSplit::default(),
        );
        assert_eq!(d.bins[&slot(16, "v")], 700.0);
        assert_eq!(d.bins[&slot(17, "v")], 700.0);
        assert_eq!(d.bins[&slot(18, "v")], 300.0);
        assert_eq!(d.bins[&slot(15, "v")], 300.0);
        assert_eq!(d.total(), 2000.0);
    }

    #[test]
    fn early_session_clamps() {
        let d = spectators_per_hour(&[session("v", 1, 100.0)], &DepartureSplit::default());
        assert_eq!(d.clamped, 2);
        assert!((d.bins[&slot(0, "v")] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn origins_proportional() {
        let a = assign_origins(100.0, &[res("a", 30.0), res("b", 70.0)]).unwrap();
        assert!((a["a"] - 30.0).abs() < 1e-12 && (a["b"] - 70.0).abs() < 1e-12);
        let a = assign_origins(100.0, &[res("a", 5.0)]).unwrap();
        assert_eq!(a["a"], 100.0);
        let a = assign_origins(100.0, &[res("a", 1.0), res("b", 1.0), res("c", 2.0)]).unwrap();
        assert_eq!((a["a"], a["b"], a["c"]), (25.0, 25.0, 50.0));
        assert!(assign_origins(100.0, &[]).is_err());
    }
}
