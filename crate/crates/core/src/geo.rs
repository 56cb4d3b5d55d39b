//! Spherical geodesy helpers and a local planar projection.
//!
//! Distances use the haversine formula on a sphere of radius
//! [`EARTH_RADIUS_M`]. Link geometry that needs a plane (interpolation,
//! weighted means, link bearings) goes through [`LocalProjection`], an
//! equirectangular projection centred on a reference point.

use core::f64::consts::PI;

use crate::error::GeoError;

/// Mean Earth radius used throughout, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A WGS-84 latitude/longitude pair in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Builds a point, rejecting coordinates outside `lat ∈ [-90, 90]`,
    /// `lon ∈ [-180, 180)`.
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..180.0).contains(&lon) {
            return Err(GeoError::OutOfRange { lat, lon });
        }
        Ok(Self { lat, lon })
    }
}

/// Great-circle distance in meters (haversine, R = 6371 km).
pub fn geodesic_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let s1 = libm::sin(dphi / 2.0);
    let s2 = libm::sin(dlambda / 2.0);
    let h = s1 * s1 + libm::cos(phi1) * libm::cos(phi2) * s2 * s2;
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(h.clamp(0.0, 1.0)))
}

/// Great-circle initial bearing from `a` towards `b`, degrees in `[0, 360)`,
/// north = 0, east = 90.
pub fn initial_bearing(a: GeoPoint, b: GeoPoint) -> Result<f64, GeoError> {
    if a == b {
        return Err(GeoError::UndefinedBearing);
    }
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let y = libm::sin(dlambda) * libm::cos(phi2);
    let x = libm::cos(phi1) * libm::sin(phi2) - libm::sin(phi1) * libm::cos(phi2) * libm::cos(dlambda);
    Ok(normalize_bearing(libm::atan2(y, x).to_degrees()))
}

/// Bearing of the straight segment `a → b` in an equirectangular plane
/// scaled at the segment's mean latitude. Unlike the great-circle initial
/// bearing this is exactly antisymmetric: swapping the arguments adds 180°.
pub fn planar_bearing(a: GeoPoint, b: GeoPoint) -> Result<f64, GeoError> {
    if a == b {
        return Err(GeoError::UndefinedBearing);
    }
    let mean_lat = (0.5 * (a.lat + b.lat)).to_radians();
    let dx = (b.lon - a.lon) * libm::cos(mean_lat);
    let dy = b.lat - a.lat;
    Ok(normalize_bearing(libm::atan2(dx, dy).to_degrees()))
}

/// Maps any finite angle to the congruent value in `[-180, 180)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = rem_euclid(x + 180.0, 360.0) - 180.0;
    // the remainder can round up to exactly 360 for tiny negative inputs.
    if r >= 180.0 {
        r - 360.0
    } else {
        r
    }
}

fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = libm::fmod(x, m);
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

/// Maps any finite angle to `[0, 360)`.
pub fn normalize_bearing(x: f64) -> f64 {
    let r = rem_euclid(x, 360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// A point in a local east/north plane, meters.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn distance(self, other: PlanarPoint) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn lerp(self, other: PlanarPoint, t: f64) -> PlanarPoint {
        PlanarPoint {
            x: self.x + (other.x - self.x) * t,
            y: self.y + (other.y - self.y) * t,
        }
    }
}

/// Equirectangular projection around a fixed origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalProjection {
    origin: GeoPoint,
    cos_lat0: f64,
}

impl LocalProjection {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            origin,
            cos_lat0: libm::cos(origin.lat.to_radians()),
        }
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn project(&self, p: GeoPoint) -> PlanarPoint {
        let k = EARTH_RADIUS_M * PI / 180.0;
        PlanarPoint {
            x: k * (p.lon - self.origin.lon) * self.cos_lat0,
            y: k * (p.lat - self.origin.lat),
        }
    }

    pub fn unproject(&self, p: PlanarPoint) -> GeoPoint {
        let k = EARTH_RADIUS_M * PI / 180.0;
        GeoPoint {
            lat: self.origin.lat + p.y / k,
            lon: self.origin.lon + p.x / (k * self.cos_lat0),
        }
    }
}

/// Offsets `origin` by `east`/`north` meters (small-offset approximation).
pub fn offset(origin: GeoPoint, east: f64, north: f64) -> GeoPoint {
    LocalProjection::new(origin).unproject(PlanarPoint { x: east, y: north })
}
