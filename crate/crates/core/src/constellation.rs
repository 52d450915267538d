//! Nominal GPS / BDS constellations and circular Keplerian propagation.
//!
//! Orbits are circular, unperturbed, and rotated into the earth-fixed frame by
//! a uniform earth rotation angle `ω_e · t` (zero at `t = 0`). Satellite clocks
//! are taken as perfect after broadcast correction.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Read;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{ecef_to_enu_rotation, normalize_angle, EARTH_RADIUS_M, EARTH_ROTATION_RATE, GM_EARTH};

/// GPS nominal semi-major axis, m.
pub const GPS_SEMI_MAJOR_AXIS_M: f64 = 26_559_700.0;
/// BDS MEO nominal semi-major axis, m.
pub const BDS_MEO_SEMI_MAJOR_AXIS_M: f64 = 27_906_100.0;

/// Radius of the circular orbit whose mean motion equals the earth rotation rate.
pub fn geosynchronous_radius() -> f64 {
    (GM_EARTH / (EARTH_ROTATION_RATE * EARTH_ROTATION_RATE)).cbrt()
}

/// Mean motion of a circular orbit of radius `a` (Kepler's third law).
pub fn mean_motion_for(a: f64) -> f64 {
    (GM_EARTH / (a * a * a)).sqrt()
}

#[derive(Debug, Error)]
pub enum ConstellationError {
    #[error("degenerate geometry: satellite and receiver coincide")]
    DegenerateGeometry,
    #[error("receiver radius {0:.1} m is not within 1% of the earth radius")]
    ReceiverOffSurface(f64),
    #[error("invalid orbit element for {sat}: {reason}")]
    InvalidElement { sat: String, reason: String },
    #[error("constellation file line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("duplicate satellite id {0}")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constellation {
    #[serde(rename = "GPS")]
    Gps,
    #[serde(rename = "BDS_MEO")]
    BdsMeo,
    #[serde(rename = "BDS_IGSO")]
    BdsIgso,
    #[serde(rename = "BDS_GEO")]
    BdsGeo,
}

impl Constellation {
    pub fn is_bds(self) -> bool {
        !matches!(self, Constellation::Gps)
    }
}

/// Which systems a receiver tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstellationSet {
    #[serde(rename = "GPS")]
    Gps,
    #[serde(rename = "BDS")]
    Bds,
    #[serde(rename = "GPS+BDS", alias = "GPS_PLUS_BDS", alias = "BDS+GPS")]
    GpsPlusBds,
}

impl ConstellationSet {
    pub const ALL: [ConstellationSet; 3] = [Self::Gps, Self::Bds, Self::GpsPlusBds];

    pub fn includes(self, c: Constellation) -> bool {
        match self {
            Self::Gps => c == Constellation::Gps,
            Self::Bds => c.is_bds(),
            Self::GpsPlusBds => true,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Gps => "GPS",
            Self::Bds => "BDS",
            Self::GpsPlusBds => "GPS+BDS",
        }
    }
}

impl fmt::Display for ConstellationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ConstellationSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GPS" => Ok(Self::Gps),
            "BDS" => Ok(Self::Bds),
            "GPS+BDS" | "BDS+GPS" | "GPS_PLUS_BDS" => Ok(Self::GpsPlusBds),
            other => Err(format!("unknown constellation set `{other}` (expected GPS, BDS or GPS+BDS)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SatId(pub String);

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SatId {
    fn from(s: &str) -> Self {
        SatId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitElements {
    pub sat_id: SatId,
    pub constellation: Constellation,
    pub semi_major_axis_m: f64,
    /// Always 0 for the nominal constellations; nonzero values are rejected.
    pub eccentricity: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    pub arg_lat_at_epoch_rad: f64,
    pub mean_motion_rad_per_s: f64,
}

impl OrbitElements {
    /// Circular element with mean motion from Kepler's third law.
    pub fn circular(
        sat_id: impl Into<SatId>,
        constellation: Constellation,
        semi_major_axis_m: f64,
        inclination_rad: f64,
        raan_rad: f64,
        arg_lat_rad: f64,
    ) -> Self {
        Self {
            sat_id: sat_id.into(),
            constellation,
            semi_major_axis_m,
            eccentricity: 0.0,
            inclination_rad,
            raan_rad: normalize_angle(raan_rad),
            arg_lat_at_epoch_rad: normalize_angle(arg_lat_rad),
            mean_motion_rad_per_s: mean_motion_for(semi_major_axis_m),
        }
    }

    pub fn period_s(&self) -> f64 {
        TAU / self.mean_motion_rad_per_s
    }

    pub fn validate(&self) -> Result<(), ConstellationError> {
        let bad = |reason: String| ConstellationError::InvalidElement { sat: self.sat_id.0.clone(), reason };
        if !(self.semi_major_axis_m > EARTH_RADIUS_M) {
            return Err(bad(format!("semi-major axis {} m is below the earth surface", self.semi_major_axis_m)));
        }
        if self.eccentricity != 0.0 {
            return Err(bad("only circular orbits (eccentricity 0) are supported".into()));
        }
        if !(0.0..=PI).contains(&self.inclination_rad) {
            return Err(bad(format!("inclination {} rad outside [0, π]", self.inclination_rad)));
        }
        for (name, v) in [("raan", self.raan_rad), ("arg_lat", self.arg_lat_at_epoch_rad)] {
            if !(0.0..TAU).contains(&v) {
                return Err(bad(format!("{name} {v} rad outside [0, 2π)")));
            }
        }
        let expected = mean_motion_for(self.semi_major_axis_m);
        if ((self.mean_motion_rad_per_s - expected) / expected).abs() > 1e-9 {
            return Err(bad(format!(
                "mean motion {} rad/s inconsistent with semi-major axis (expected {expected})",
                self.mean_motion_rad_per_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefState {
    pub position_m: Vector3<f64>,
    pub velocity_m_per_s: Vector3<f64>,
    pub t: f64,
}

/// Satellite time minus GPS time after broadcast correction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SatelliteClock {
    pub offset_s: f64,
}

fn gps_elements(epoch: f64) -> Vec<OrbitElements> {
    let inc = 55f64.to_radians();
    let mut out = Vec::with_capacity(24);
    for plane in 0..6 {
        let raan = (plane as f64) * 60f64.to_radians();
        for slot in 0..4 {
            let phase = (slot as f64) * 90f64.to_radians() + (plane as f64) * 15f64.to_radians();
            let id = format!("G{:02}", plane * 4 + slot + 1);
            out.push(at_epoch(OrbitElements::circular(id.as_str(), Constellation::Gps, GPS_SEMI_MAJOR_AXIS_M, inc, raan, phase), epoch));
        }
    }
    out
}

fn bds_elements(epoch: f64) -> Vec<OrbitElements> {
    let geo_a = geosynchronous_radius();
    let inc55 = 55f64.to_radians();
    let mut out = Vec::with_capacity(30);
    for (k, lon_deg) in [80.0f64, 110.5, 140.0].into_iter().enumerate() {
        let id = format!("C{:02}", k + 1);
        out.push(at_epoch(OrbitElements::circular(id.as_str(), Constellation::BdsGeo, geo_a, 0.0, 0.0, lon_deg.to_radians()), epoch));
    }
    for k in 0..3 {
        let id = format!("C{:02}", k + 6);
        let phase = (k as f64) * 120f64.to_radians();
        out.push(at_epoch(OrbitElements::circular(id.as_str(), Constellation::BdsIgso, geo_a, inc55, 118f64.to_radians(), phase), epoch));
    }
    for plane in 0..3 {
        let raan = (plane as f64) * 120f64.to_radians();
        for slot in 0..8 {
            let phase = (slot as f64) * 45f64.to_radians() + (plane as f64) * 15f64.to_radians();
            let id = format!("C{:02}", 11 + plane * 8 + slot);
            out.push(at_epoch(
                OrbitElements::circular(id.as_str(), Constellation::BdsMeo, BDS_MEO_SEMI_MAJOR_AXIS_M, inc55, raan, phase),
                epoch,
            ));
        }
    }
    out
}

/// Re-references an element defined at simulation time 0 so that `t = 0`
/// corresponds to `epoch` seconds later, keeping the earth-fixed geometry.
fn at_epoch(mut el: OrbitElements, epoch: f64) -> OrbitElements {
    if epoch != 0.0 {
        el.arg_lat_at_epoch_rad = normalize_angle(el.arg_lat_at_epoch_rad + el.mean_motion_rad_per_s * epoch);
        el.raan_rad = normalize_angle(el.raan_rad - EARTH_ROTATION_RATE * epoch);
    }
    el
}

/// Nominal constellation for `kind`, with `t = 0` at `epoch` seconds after
/// the reference configuration.
///
/// GPS: 24 satellites in six planes (55°, RAAN 60° apart, four slots each).
/// BDS: 24 MEO (three planes at 55°) plus 3 IGSO and 3 GEO at geosynchronous
/// radius.
pub fn build_nominal_constellation(kind: ConstellationSet, epoch: f64) -> Vec<OrbitElements> {
    match kind {
        ConstellationSet::Gps => gps_elements(epoch),
        ConstellationSet::Bds => bds_elements(epoch),
        ConstellationSet::GpsPlusBds => {
            let mut v = gps_elements(epoch);
            v.extend(bds_elements(epoch));
            v
        }
    }
}

/// Position and velocity in the inertial (non-rotating) frame.
pub fn propagate_inertial(el: &OrbitElements, t: f64) -> (Vector3<f64>, Vector3<f64>) {
    let a = el.semi_major_axis_m;
    let n = el.mean_motion_rad_per_s;
    let u = el.arg_lat_at_epoch_rad + n * t;
    let (su, cu) = u.sin_cos();
    let (so, co) = el.raan_rad.sin_cos();
    let (si, ci) = el.inclination_rad.sin_cos();
    let pos = Vector3::new(cu * co - su * ci * so, cu * so + su * ci * co, su * si) * a;
    let vel = Vector3::new(-su * co - cu * ci * so, -su * so + cu * ci * co, cu * si) * (a * n);
    (pos, vel)
}

/// Earth-fixed position and velocity at simulation time `t`.
pub fn propagate(el: &OrbitElements, t: f64) -> EcefState {
    let (r_i, v_i) = propagate_inertial(el, t);
    let theta = EARTH_ROTATION_RATE * t;
    let (s, c) = theta.sin_cos();
    // R3(θ): inertial -> earth-fixed
    let rot = |v: &Vector3<f64>| Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z);
    let r_e = rot(&r_i);
    let omega = Vector3::new(0.0, 0.0, EARTH_ROTATION_RATE);
    let v_e = rot(&v_i) - omega.cross(&r_e);
    EcefState { position_m: r_e, velocity_m_per_s: v_e, t }
}

/// Elevation and azimuth of `sat_pos` seen from `rx_pos`, in the receiver's
/// local east-north-up frame. Azimuth is clockwise from north in `[0, 2π)`.
pub fn elevation_azimuth(sat_pos: &Vector3<f64>, rx_pos: &Vector3<f64>) -> Result<(f64, f64), ConstellationError> {
    let r = rx_pos.norm();
    if (r - EARTH_RADIUS_M).abs() > 0.01 * EARTH_RADIUS_M {
        return Err(ConstellationError::ReceiverOffSurface(r));
    }
    let los = sat_pos - rx_pos;
    let range = los.norm();
    if range == 0.0 {
        return Err(ConstellationError::DegenerateGeometry);
    }
    let enu = ecef_to_enu_rotation(rx_pos) * los;
    let el = (enu.z / range).clamp(-1.0, 1.0).asin();
    let az = normalize_angle(enu.x.atan2(enu.y));
    Ok((el, az))
}

#[derive(Debug, Deserialize)]
struct ElementRecord {
    id: String,
    constellation: Constellation,
    semi_major_axis_m: f64,
    eccentricity: f64,
    inclination_deg: f64,
    raan_deg: f64,
    arg_lat_deg: f64,
    mean_motion_rad_per_s: f64,
}

/// Reads a constellation definition.
///
/// CSV with header
/// `id,constellation,semi_major_axis_m,eccentricity,inclination_deg,raan_deg,arg_lat_deg,mean_motion_rad_per_s`;
/// lines starting with `#` are ignored. Constellation tags are `GPS`,
/// `BDS_MEO`, `BDS_IGSO`, `BDS_GEO`.
pub fn read_constellation<R: Read>(reader: R) -> Result<Vec<OrbitElements>, ConstellationError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut out: Vec<OrbitElements> = Vec::new();
    for rec in rdr.deserialize::<ElementRecord>() {
        let rec =
            rec.map_err(|e| ConstellationError::Parse { line: e.position().map(|p| p.line()).unwrap_or(0), message: e.to_string() })?;
        let el = OrbitElements {
            sat_id: SatId(rec.id),
            constellation: rec.constellation,
            semi_major_axis_m: rec.semi_major_axis_m,
            eccentricity: rec.eccentricity,
            inclination_rad: rec.inclination_deg.to_radians(),
            raan_rad: normalize_angle(rec.raan_deg.to_radians()),
            arg_lat_at_epoch_rad: normalize_angle(rec.arg_lat_deg.to_radians()),
            mean_motion_rad_per_s: rec.mean_motion_rad_per_s,
        };
        el.validate()?;
        if out.iter().any(|o| o.sat_id == el.sat_id) {
            return Err(ConstellationError::DuplicateId(el.sat_id.0));
        }
        out.push(el);
    }
    Ok(out)
}

pub fn load_constellation(path: &Path) -> Result<Vec<OrbitElements>, ConstellationError> {
    read_constellation(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Geodetic;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn gps_has_24_in_six_planes() {
        let gps = build_nominal_constellation(ConstellationSet::Gps, 0.0);
        assert_eq!(gps.len(), 24);
        let raans: BTreeSet<i64> = gps.iter().map(|e| (e.raan_rad.to_degrees() * 1e6).round() as i64).collect();
        assert_eq!(raans.len(), 6);
        let raans: Vec<f64> = raans.into_iter().map(|r| r as f64 / 1e6).collect();
        for w in raans.windows(2) {
            assert!((w[1] - w[0] - 60.0).abs() < 1e-6);
        }
        for e in &gps {
            assert!((e.inclination_rad.to_degrees() - 55.0).abs() < 1e-12);
            assert!((e.semi_major_axis_m - 26_560e3).abs() < 1e3);
        }
    }

    #[test]
    fn union_is_disjoint_sum() {
        let g = build_nominal_constellation(ConstellationSet::Gps, 0.0);
        let b = build_nominal_constellation(ConstellationSet::Bds, 0.0);
        let u = build_nominal_constellation(ConstellationSet::GpsPlusBds, 0.0);
        assert_eq!(u.len(), g.len() + b.len());
        assert_eq!(u.len(), 54);
        let ids: BTreeSet<&SatId> = u.iter().map(|e| &e.sat_id).collect();
        assert_eq!(ids.len(), 54);
    }

    #[test]
    fn bds_counts_by_kind() {
        let b = build_nominal_constellation(ConstellationSet::Bds, 0.0);
        let count = |c| b.iter().filter(|e| e.constellation == c).count();
        assert_eq!(count(Constellation::BdsMeo), 24);
        assert_eq!(count(Constellation::BdsIgso), 3);
        assert_eq!(count(Constellation::BdsGeo), 3);
    }

    #[test]
    fn geo_mean_motion_is_sidereal_rate() {
        // Independent arithmetic: a = (GM/ω²)^(1/3) ≈ 42 164 km, n = sqrt(GM/a³).
        let a = (3.986004418e14f64 / (7.2921151467e-5f64).powi(2)).powf(1.0 / 3.0);
        assert!((a - 42_164_170.0).abs() < 100.0);
        let n = (3.986004418e14 / a.powi(3)).sqrt();
        for e in build_nominal_constellation(ConstellationSet::Bds, 0.0).iter().filter(|e| e.constellation == Constellation::BdsGeo) {
            assert_eq!(e.inclination_rad, 0.0);
            assert!((e.mean_motion_rad_per_s - n).abs() < 1e-12);
            assert!((e.mean_motion_rad_per_s - 7.2921e-5).abs() < 1e-8);
        }
    }

    #[test]
    fn every_nominal_element_validates() {
        for e in build_nominal_constellation(ConstellationSet::GpsPlusBds, 12_345.0) {
            e.validate().unwrap();
            let n = e.mean_motion_rad_per_s;
            let a = e.semi_major_axis_m;
            assert!(((n * n * a * a * a) / GM_EARTH - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn geo_is_fixed_in_earth_frame() {
        let geo =
            build_nominal_constellation(ConstellationSet::Bds, 0.0).into_iter().find(|e| e.constellation == Constellation::BdsGeo).unwrap();
        let mut el = geo.clone();
        el.arg_lat_at_epoch_rad = 0.0;
        let p0 = propagate(&el, 0.0).position_m;
        for t in [3600.0, 86_400.0] {
            assert!((propagate(&el, t).position_m - p0).norm() < 1.0);
        }
        assert!(propagate(&el, 3600.0).velocity_m_per_s.norm() < 1e-3);
    }

    #[test]
    fn epoch_shift_matches_propagation() {
        let base = build_nominal_constellation(ConstellationSet::Gps, 0.0);
        let shifted = build_nominal_constellation(ConstellationSet::Gps, 5000.0);
        for (b, s) in base.iter().zip(&shifted) {
            let d = propagate(b, 5000.0).position_m - propagate(s, 0.0).position_m;
            assert!(d.norm() < 1e-3, "{}", d.norm());
        }
    }

    #[test]
    fn inertial_speed_matches_finite_difference() {
        let el = &build_nominal_constellation(ConstellationSet::Gps, 0.0)[5];
        let t = 1234.5;
        let dt = 1e-3;
        let (p1, _) = propagate_inertial(el, t - dt / 2.0);
        let (p2, _) = propagate_inertial(el, t + dt / 2.0);
        let fd_speed = ((p2 - p1) / dt).norm();
        let expected = el.mean_motion_rad_per_s * el.semi_major_axis_m;
        assert!((fd_speed - expected).abs() < 1e-3, "{fd_speed} vs {expected}");
        let (_, v) = propagate_inertial(el, t);
        assert!((v.norm() - expected).abs() < 1e-6);
    }

    #[test]
    fn ecef_velocity_matches_finite_difference() {
        let el = &build_nominal_constellation(ConstellationSet::Bds, 0.0)[10];
        let dt = 1e-2;
        let p1 = propagate(el, 500.0 - dt / 2.0).position_m;
        let p2 = propagate(el, 500.0 + dt / 2.0).position_m;
        let v = propagate(el, 500.0).velocity_m_per_s;
        assert!(((p2 - p1) / dt - v).norm() < 1e-3);
    }

    #[test]
    fn zenith_and_antipode() {
        let rx = Geodetic::from_degrees(-27.5, 153.0, 0.0).to_ecef();
        let sat = rx.normalize() * 26_560e3;
        let (el, _) = elevation_azimuth(&sat, &rx).unwrap();
        assert!((el - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        let (el, _) = elevation_azimuth(&(-sat), &rx).unwrap();
        assert!(el < 0.0);
    }

    #[test]
    fn due_east_azimuth() {
        // At (0°, 0°) east is +y and up is +x.
        let rx = Vector3::new(EARTH_RADIUS_M, 0.0, 0.0);
        let sat = Vector3::new(EARTH_RADIUS_M, 1.0e6, 0.0);
        let (el, az) = elevation_azimuth(&sat, &rx).unwrap();
        assert!((az - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(el.abs() < 1e-12);
        // due north is +z
        let (_, az) = elevation_azimuth(&Vector3::new(EARTH_RADIUS_M, 0.0, 5e5), &rx).unwrap();
        assert!(az.abs() < 1e-12);
    }

    #[test]
    fn coincident_positions_are_degenerate() {
        let rx = Vector3::new(EARTH_RADIUS_M, 0.0, 0.0);
        assert!(matches!(elevation_azimuth(&rx, &rx), Err(ConstellationError::DegenerateGeometry)));
    }

    #[test]
    fn reads_hand_made_file() {
        let n = mean_motion_for(26_559_700.0);
        let text = format!(
            "# tiny\nid,constellation,semi_major_axis_m,eccentricity,inclination_deg,raan_deg,arg_lat_deg,mean_motion_rad_per_s\n\
             T1,GPS,26559700,0,55,0,0,{n}\nT2,BDS_GEO,{},0,0,0,110.5,{}\n",
            geosynchronous_radius(),
            EARTH_ROTATION_RATE
        );
        let els = read_constellation(text.as_bytes()).unwrap();
        assert_eq!(els.len(), 2);
        assert_eq!(els[1].constellation, Constellation::BdsGeo);
    }

    #[test]
    fn rejects_inconsistent_mean_motion() {
        let text = "id,constellation,semi_major_axis_m,eccentricity,inclination_deg,raan_deg,arg_lat_deg,mean_motion_rad_per_s\n\
                    T1,GPS,26559700,0,55,0,0,1.0e-4\n";
        assert!(matches!(read_constellation(text.as_bytes()), Err(ConstellationError::InvalidElement { .. })));
    }

    proptest! {
        #[test]
        fn circular_radius_is_constant(idx in 0usize..54, t in 0.0f64..200_000.0) {
            let all = build_nominal_constellation(ConstellationSet::GpsPlusBds, 0.0);
            let el = &all[idx];
            let r = propagate(el, t).position_m.norm();
            prop_assert!((r - el.semi_major_axis_m).abs() < 1e-3);
            prop_assert!((2.0e7..=4.5e7).contains(&r));
        }

        #[test]
        fn inertial_motion_is_periodic(idx in 0usize..54, t in 0.0f64..100_000.0) {
            let all = build_nominal_constellation(ConstellationSet::GpsPlusBds, 0.0);
            let el = &all[idx];
            let (a, _) = propagate_inertial(el, t);
            let (b, _) = propagate_inertial(el, t + el.period_s());
            prop_assert!((a - b).norm() < 1e-6, "{}", (a - b).norm());
        }
    }
}
