//! Spherical-earth geodesy: great-circle distance, forward azimuth, and
//! destination points. These are the primitives every point-modification
//! strategy is built on.
//!
//! All angles are degrees at the API boundary and radians internally. The
//! sphere radius is fixed at [`EARTH_RADIUS_M`]; displacement distances in
//! this toolkit are tens of meters, where the sphere/ellipsoid difference
//! is far below GPS noise.

use crate::error::{Error, Result};
use crate::model::GeoPoint;

/// Mean earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Direction in decimal degrees clockwise from north, normalized to [0, 360).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bearing(f64);

impl Bearing {
    pub fn new(degrees: f64) -> Self {
        let mut d = degrees.rem_euclid(360.0);
        // rem_euclid of a tiny negative rounds to 360.0 itself
        if d >= 360.0 {
            d = 0.0;
        }
        Bearing(d)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn opposite(self) -> Self {
        Bearing::new(self.0 + 180.0)
    }
}

/// A non-negative distance in meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DistanceMeters(f64);

impl DistanceMeters {
    pub fn new(meters: f64) -> Result<Self> {
        if meters.is_finite() && meters >= 0.0 {
            Ok(DistanceMeters(meters))
        } else {
            Err(Error::InvalidParameter(format!(
                "distance must be finite and non-negative, got {meters}"
            )))
        }
    }

    pub fn meters(self) -> f64 {
        self.0
    }

    pub(crate) fn unchecked(meters: f64) -> Self {
        debug_assert!(meters >= 0.0);
        DistanceMeters(meters)
    }
}

/// Great-circle distance between two points (haversine formula).
///
/// Symmetric by construction; zero exactly when the points are equal.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> DistanceMeters {
    // Subtracting in degrees before converting keeps nearby points exact.
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();

    let sin_dlat = (dlat * 0.5).sin();
    let sin_dlon = (dlon * 0.5).sin();
    let h = sin_dlat * sin_dlat + lat_a.cos() * lat_b.cos() * sin_dlon * sin_dlon;
    let central = 2.0 * h.sqrt().min(1.0).asin();
    DistanceMeters::unchecked(central * EARTH_RADIUS_M)
}

/// Point reached by traveling `distance` from `origin` along `bearing`.
///
/// Computed by rotating the origin's unit position vector toward the local
/// tangent direction, then converting back with `atan2`; this keeps the
/// result well-conditioned for displacements far below a meter and needs no
/// pole special cases. Longitude comes out in [-180, 180].
pub fn destination_point(origin: GeoPoint, bearing: Bearing, distance: DistanceMeters) -> GeoPoint {
    if distance.meters() == 0.0 {
        return origin;
    }
    let delta = distance.meters() / EARTH_RADIUS_M;
    let theta = bearing.degrees().to_radians();
    let (sin_lat, cos_lat) = origin.lat.to_radians().sin_cos();
    let (sin_lon, cos_lon) = origin.lon.to_radians().sin_cos();
    let (sin_d, cos_d) = delta.sin_cos();
    let (sin_t, cos_t) = theta.sin_cos();

    // Unit position vector and the local north/east frame at the origin.
    let (rx, ry, rz) = (cos_lat * cos_lon, cos_lat * sin_lon, sin_lat);
    let (nx, ny, nz) = (-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat);
    let (ex, ey) = (-sin_lon, cos_lon);

    // Initial tangent of the great circle, then march `delta` radians.
    let tx = cos_t * nx + sin_t * ex;
    let ty = cos_t * ny + sin_t * ey;
    let tz = cos_t * nz;
    let x = cos_d * rx + sin_d * tx;
    let y = cos_d * ry + sin_d * ty;
    let z = cos_d * rz + sin_d * tz;

    let lat = z.atan2(x.hypot(y)).to_degrees();
    let lon = y.atan2(x).to_degrees();
    GeoPoint { lat, lon }
}

/// Forward azimuth from `a` to `b`, in [0, 360). Undefined (and an error)
/// when the points coincide.
pub fn initial_bearing(a: GeoPoint, b: GeoPoint) -> Result<Bearing> {
    if a == b {
        return Err(Error::DegenerateBearing);
    }
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let y = dlon.sin() * lat_b.cos();
    let x = lat_a.cos() * lat_b.sin() - lat_a.sin() * lat_b.cos() * dlon.cos();
    Ok(Bearing::new(y.atan2(x).to_degrees()))
}
