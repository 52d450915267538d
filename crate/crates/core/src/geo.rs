//! Earth constants and local-frame helpers.
//!
//! Receiver positions use a spherical earth of radius [`EARTH_RADIUS_M`]; the
//! local "up" direction is the geocentric radial. That keeps zenith and
//! horizon definitions exact, which is all the visibility statistics need.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Earth gravitational parameter, m³/s².
pub const GM_EARTH: f64 = 3.986004418e14;
/// Earth rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.2921151467e-5;
/// Equatorial earth radius, m.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Geocentric latitude / longitude / height above the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodetic {
    pub lat_rad: f64,
    pub lon_rad: f64,
    pub height_m: f64,
}

impl Geodetic {
    pub fn from_degrees(lat_deg: f64, lon_deg: f64, height_m: f64) -> Self {
        Self { lat_rad: lat_deg.to_radians(), lon_rad: lon_deg.to_radians(), height_m }
    }

    pub fn to_ecef(&self) -> Vector3<f64> {
        let r = EARTH_RADIUS_M + self.height_m;
        let (slat, clat) = self.lat_rad.sin_cos();
        let (slon, clon) = self.lon_rad.sin_cos();
        Vector3::new(r * clat * clon, r * clat * slon, r * slat)
    }

    pub fn from_ecef(p: &Vector3<f64>) -> Self {
        let r = p.norm();
        Self { lat_rad: (p.z / r).asin(), lon_rad: p.y.atan2(p.x), height_m: r - EARTH_RADIUS_M }
    }
}

/// Rotation taking earth-fixed vectors into the east-north-up frame at `origin`.
///
/// Rows are the east, north and up unit vectors expressed in ECEF.
pub fn ecef_to_enu_rotation(origin: &Vector3<f64>) -> Matrix3<f64> {
    let g = Geodetic::from_ecef(origin);
    let (slat, clat) = g.lat_rad.sin_cos();
    let (slon, clon) = g.lon_rad.sin_cos();
    Matrix3::new(
        -slon,
        clon,
        0.0, //
        -slat * clon,
        -slat * slon,
        clat, //
        clat * clon,
        clat * slon,
        slat,
    )
}

/// Earth-fixed point displaced from `origin` by a local east/north/up offset.
pub fn enu_offset(origin: &Vector3<f64>, east: f64, north: f64, up: f64) -> Vector3<f64> {
    let rot = ecef_to_enu_rotation(origin);
    origin + rot.transpose() * Vector3::new(east, north, up)
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = a.rem_euclid(tau);
    // rem_euclid can round up to exactly tau for tiny negative inputs
    if r >= tau {
        0.0
    } else {
        r
    }
}
