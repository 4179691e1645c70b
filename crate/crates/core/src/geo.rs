//! Great-circle distances on WGS84 coordinates.

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Haversine distance in kilometres.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Latitude offset in degrees that spans `km` kilometres along a meridian.
pub fn km_to_lat_deg(km: f64) -> f64 {
    (km / EARTH_RADIUS_KM).to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_symmetry() {
        assert_eq!(haversine_km(-22.9, -43.2, -22.9, -43.2), 0.0);
        let d1 = haversine_km(-22.9, -43.2, -22.8, -43.1);
        let d2 = haversine_km(-22.8, -43.1, -22.9, -43.2);
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn meridian_offset_round_trips() {
        let d = haversine_km(0.0, 10.0, km_to_lat_deg(2.5), 10.0);
        assert!((d - 2.5).abs() < 1e-9);
    }
}
