//! GPS trajectory features on the haversine sphere.

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

fn check_coord(lat: f64, lon: f64) -> Result<()> {
    if !lat.is_finite() || !lon.is_finite() || lat.abs() > 90.0 || lon.abs() > 180.0 {
        return Err(Error::Data(format!("coordinate out of range: ({lat}, {lon})")));
    }
    Ok(())
}

/// Great-circle distance in meters between two (lat, lon) points in degrees.
pub fn haversine_m(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    check_coord(a.0, a.1)?;
    check_coord(b.0, b.1)?;
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    Ok(2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin())
}

/// Trajectory summary of one window's GPS points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeoFeatures {
    /// First-to-last distance; needs ≥ 2 points.
    pub direct_distance: Option<f64>,
    /// Sum of consecutive hops; needs ≥ 2 points.
    pub total_distance: Option<f64>,
    /// RMS distance to the arithmetic centroid; needs ≥ 1 point.
    pub radius_of_gyration: Option<f64>,
}

pub fn geo_features(points: &[(f64, f64)]) -> Result<GeoFeatures> {
    for &(lat, lon) in points {
        check_coord(lat, lon)?;
    }
    if points.is_empty() {
        return Ok(GeoFeatures::default());
    }
    let n = points.len() as f64;
    let centroid = (
        points.iter().map(|p| p.0).sum::<f64>() / n,
        points.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let msd = points
        .iter()
        .map(|&p| haversine_m(p, centroid).map(|d| d * d))
        .sum::<Result<f64>>()?
        / n;
    let radius_of_gyration = Some(msd.sqrt());
    if points.len() < 2 {
        return Ok(GeoFeatures {
            radius_of_gyration,
            ..Default::default()
        });
    }
    let direct = haversine_m(points[0], *points.last().unwrap())?;
    let mut total = 0.0;
    for pair in points.windows(2) {
        total += haversine_m(pair[0], pair[1])?;
    }
    Ok(GeoFeatures {
        direct_distance: Some(direct),
        total_distance: Some(total),
        radius_of_gyration,
    })
}
