//! Spherical geometry kernels: great-circle distance and mean centers.
//!
//! The Earth model is a perfect sphere of mean radius
//! [`EARTH_RADIUS_KM`]; no ellipsoidal correction is applied. Distances
//! use the haversine form with the atan2 variant, which stays accurate
//! both for the near-zero displacements that dominate daily tracks and at
//! the antipodes.

use thiserror::Error;

/// IUGG mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Upper bound on any great-circle distance: half the circumference.
pub const MAX_DISTANCE_KM: f64 = std::f64::consts::PI * EARTH_RADIUS_KM;

#[derive(Debug, Error, PartialEq)]
pub enum GeodesyError {
    #[error("coordinate out of range or not finite: lat={lat}, lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("mean center of an empty point sequence is undefined")]
    EmptyPoints,
}

/// A position in decimal degrees. Construction validates the ranges, so a
/// `GeoPoint` always holds finite lat in [-90, 90] and lon in [-180, 180].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeodesyError> {
        if lat.is_finite()
            && lon.is_finite()
            && (-90.0..=90.0).contains(&lat)
            && (-180.0..=180.0).contains(&lon)
        {
            Ok(GeoPoint { lat, lon })
        } else {
            Err(GeodesyError::InvalidCoordinate { lat, lon })
        }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Great-circle distance between two points, in kilometers.
///
/// Symmetric by construction: both half-angle terms go through `abs`, so
/// swapping the arguments evaluates the exact same float expressions.
pub fn great_circle_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    let half_dlat = (b.lat - a.lat).abs().to_radians() / 2.0;
    let half_dlon = (b.lon - a.lon).abs().to_radians() / 2.0;

    let sin_dlat = half_dlat.sin();
    let sin_dlon = half_dlon.sin();
    let h = sin_dlat * sin_dlat + lat_a.cos() * lat_b.cos() * sin_dlon * sin_dlon;
    // h can creep above 1 by an ulp for antipodal pairs.
    let central_angle = 2.0 * h.sqrt().atan2((1.0 - h).max(0.0).sqrt());

    EARTH_RADIUS_KM * central_angle
}

/// Mean center: the arithmetic mean of latitudes and of longitudes, in
/// degrees.
///
/// Computed as a running mean, so a sequence of identical points returns
/// that point exactly. Tracks that straddle the antimeridian average to a
/// geometrically wrong center; callers flag those in diagnostics instead
/// of reinterpreting the coordinates.
pub fn mean_center<I>(points: I) -> Result<GeoPoint, GeodesyError>
where
    I: IntoIterator<Item = GeoPoint>,
{
    let mut lat = 0.0_f64;
    let mut lon = 0.0_f64;
    let mut count = 0u64;
    for p in points {
        count += 1;
        let k = count as f64;
        lat += (p.lat - lat) / k;
        lon += (p.lon - lon) / k;
    }
    if count == 0 {
        return Err(GeodesyError::EmptyPoints);
    }
    // The running mean stays within the hull of the inputs up to rounding;
    // the clamp covers the last-ulp case at the domain edges.
    Ok(GeoPoint {
        lat: lat.clamp(-90.0, 90.0),
        lon: lon.clamp(-180.0, 180.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn rejects_invalid_coordinates() {
        assert!(GeoPoint::new(90.1, 0.0).is_err());
        assert!(GeoPoint::new(-90.1, 0.0).is_err());
        assert!(GeoPoint::new(0.0, 180.1).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::INFINITY).is_err());
        assert!(GeoPoint::new(-90.0, 180.0).is_ok());
    }

    #[test]
    fn identical_points_are_zero() {
        assert_eq!(great_circle_distance(p(10.0, 20.0), p(10.0, 20.0)), 0.0);
    }

    #[test]
    fn antipodal_is_half_circumference() {
        let d = great_circle_distance(p(0.0, 0.0), p(0.0, 180.0));
        assert!((d - MAX_DISTANCE_KM).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn pole_is_quarter_circumference() {
        let d = great_circle_distance(p(0.0, 0.0), p(90.0, 0.0));
        let expected = std::f64::consts::FRAC_PI_2 * EARTH_RADIUS_KM;
        assert!((d - expected).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn one_degree_of_equatorial_longitude() {
        let d = great_circle_distance(p(0.0, 0.0), p(0.0, 1.0));
        let expected = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        assert!((d - expected).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn mean_center_examples() {
        let c = mean_center([p(5.0, 5.0)]).unwrap();
        assert_eq!((c.lat(), c.lon()), (5.0, 5.0));

        let c = mean_center([p(0.0, 10.0), p(0.0, -10.0)]).unwrap();
        assert_eq!((c.lat(), c.lon()), (0.0, 0.0));

        let c = mean_center([p(10.0, 20.0), p(20.0, 40.0), p(30.0, 60.0)]).unwrap();
        assert!((c.lat() - 20.0).abs() < 1e-12);
        assert!((c.lon() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn mean_center_of_empty_errors() {
        assert_eq!(mean_center([]), Err(GeodesyError::EmptyPoints));
    }

    prop_compose! {
        fn arb_point()(lat in -90.0..=90.0f64, lon in -180.0..=180.0f64) -> GeoPoint {
            GeoPoint::new(lat, lon).unwrap()
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_zero_on_diagonal(a in arb_point(), b in arb_point()) {
            let ab = great_circle_distance(a, b);
            let ba = great_circle_distance(b, a);
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(great_circle_distance(a, a), 0.0);
        }

        #[test]
        fn within_sphere_range(a in arb_point(), b in arb_point()) {
            let d = great_circle_distance(a, b);
            prop_assert!(d >= 0.0);
            prop_assert!(d <= MAX_DISTANCE_KM + 1e-9);
        }

        #[test]
        fn triangle_inequality(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ac = great_circle_distance(a, c);
            let ab = great_circle_distance(a, b);
            let bc = great_circle_distance(b, c);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn mean_of_copies_is_exact(point in arb_point(), n in 1usize..50) {
            let c = mean_center(std::iter::repeat_n(point, n)).unwrap();
            prop_assert_eq!(c.lat(), point.lat());
            prop_assert_eq!(c.lon(), point.lon());
        }
    }
}
