//! Elevation masks and satellite availability along a trajectory.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constellation::{elevation_azimuth, propagate, ConstellationError, EcefState, OrbitElements, SatId};
use crate::estimation::{dop_at, DEFAULT_GDOP_THRESHOLD};
use crate::geo::normalize_angle;
use crate::trajectory::{Route, Trajectory};

pub const DEFAULT_CUTOFF_DEG: f64 = 10.0;
/// Matches a 10 Hz receiver output.
pub const DEFAULT_EPOCH_STEP_S: f64 = 0.1;
pub const EPOCH_CSV_HEADER: &str = "t_s,nsat,class,gdop,visible_ids";

#[derive(Debug, Error)]
pub enum VisibilityError {
    #[error("mask sectors must cover [0, 2pi) contiguously: {0}")]
    SectorCoverage(String),
    #[error("sector {index} minimum elevation {min_deg:.3} deg is below the base cutoff {base_deg:.3} deg")]
    SectorBelowCutoff { index: usize, min_deg: f64, base_deg: f64 },
    #[error("epoch step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("mask schedule is empty or not ordered by start time")]
    InvalidSchedule,
    #[error(transparent)]
    Geometry(#[from] ConstellationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSector {
    pub azimuth_start_rad: f64,
    pub azimuth_end_rad: f64,
    pub min_elevation_rad: f64,
}

/// Azimuth-sectored elevation mask. A satellite is visible when its
/// elevation is strictly above the minimum of the sector holding its
/// azimuth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityMask {
    sectors: Vec<MaskSector>,
    base_cutoff_rad: f64,
}

const COVERAGE_TOL: f64 = 1e-9;

impl VisibilityMask {
    pub fn new(sectors: Vec<MaskSector>, base_cutoff_rad: f64) -> Result<Self, VisibilityError> {
        let m = Self { sectors, base_cutoff_rad };
        m.validate()?;
        Ok(m)
    }

    pub fn open_sky(cutoff_rad: f64) -> Self {
        Self {
            sectors: vec![MaskSector { azimuth_start_rad: 0.0, azimuth_end_rad: TAU, min_elevation_rad: cutoff_rad }],
            base_cutoff_rad: cutoff_rad,
        }
    }

    /// Street canyon with walls of height-to-width ratio `aspect` on both
    /// sides of a street running along `heading_rad`. A wall seen at relative
    /// azimuth `a` occludes up to `atan(2 * aspect * |sin a|)`; each of the
    /// equal-width sectors takes the worst case over its span.
    pub fn street_canyon(heading_rad: f64, aspect: f64, sector_count: usize, base_cutoff_rad: f64) -> Self {
        let n = sector_count.max(1);
        let w = TAU / n as f64;
        let sectors = (0..n)
            .map(|i| {
                let a0 = i as f64 * w;
                let a1 = if i + 1 == n { TAU } else { (i + 1) as f64 * w };
                let s = max_abs_sin(a0 - heading_rad, a1 - heading_rad);
                MaskSector { azimuth_start_rad: a0, azimuth_end_rad: a1, min_elevation_rad: (2.0 * aspect * s).atan().max(base_cutoff_rad) }
            })
            .collect();
        Self { sectors, base_cutoff_rad }
    }

    pub fn sectors(&self) -> &[MaskSector] {
        &self.sectors
    }

    pub fn base_cutoff_rad(&self) -> f64 {
        self.base_cutoff_rad
    }

    pub fn validate(&self) -> Result<(), VisibilityError> {
        let cov = |m: &str| VisibilityError::SectorCoverage(m.to_string());
        let first = self.sectors.first().ok_or_else(|| cov("no sectors"))?;
        if first.azimuth_start_rad.abs() > COVERAGE_TOL {
            return Err(cov("first sector must start at 0"));
        }
        for (i, s) in self.sectors.iter().enumerate() {
            if !(s.azimuth_end_rad > s.azimuth_start_rad) {
                return Err(VisibilityError::SectorCoverage(format!("sector {i} is empty or reversed")));
            }
            if let Some(next) = self.sectors.get(i + 1) {
                if (next.azimuth_start_rad - s.azimuth_end_rad).abs() > COVERAGE_TOL {
                    return Err(VisibilityError::SectorCoverage(format!("gap or overlap after sector {i}")));
                }
            }
            if s.min_elevation_rad < self.base_cutoff_rad - COVERAGE_TOL || s.min_elevation_rad.is_nan() {
                return Err(VisibilityError::SectorBelowCutoff {
                    index: i,
                    min_deg: s.min_elevation_rad.to_degrees(),
                    base_deg: self.base_cutoff_rad.to_degrees(),
                });
            }
        }
        let last = self.sectors.last().expect("non-empty");
        if (last.azimuth_end_rad - TAU).abs() > COVERAGE_TOL {
            return Err(cov("last sector must end at 2pi"));
        }
        Ok(())
    }

    pub fn min_elevation_at(&self, azimuth_rad: f64) -> f64 {
        let az = normalize_angle(azimuth_rad);
        let idx = self.sectors.partition_point(|s| s.azimuth_end_rad <= az);
        self.sectors[idx.min(self.sectors.len() - 1)].min_elevation_rad
    }

    pub fn admits(&self, elevation_rad: f64, azimuth_rad: f64) -> bool {
        elevation_rad > self.min_elevation_at(azimuth_rad)
    }

    /// Copy with every sector minimum raised by `delta_rad` (clamped to 90 deg).
    pub fn raised(&self, delta_rad: f64) -> Self {
        let mut m = self.clone();
        for s in &mut m.sectors {
            s.min_elevation_rad = (s.min_elevation_rad + delta_rad.max(0.0)).min(FRAC_PI_2);
        }
        m
    }
}

/// Largest |sin x| for x in [a, b].
fn max_abs_sin(a: f64, b: f64) -> f64 {
    // |sin| peaks at pi/2 + k*pi
    let k = ((a - FRAC_PI_2) / std::f64::consts::PI).ceil();
    if FRAC_PI_2 + k * std::f64::consts::PI <= b {
        1.0
    } else {
        a.sin().abs().max(b.sin().abs())
    }
}

/// Mask in force at a given time. A schedule holds each mask from its start
/// time until the next entry; with a period it repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MaskProfile {
    Fixed(VisibilityMask),
    Schedule { entries: Vec<(f64, VisibilityMask)>, period_s: Option<f64> },
}

impl MaskProfile {
    pub fn validate(&self) -> Result<(), VisibilityError> {
        match self {
            MaskProfile::Fixed(m) => m.validate(),
            MaskProfile::Schedule { entries, period_s } => {
                if entries.is_empty() || entries.windows(2).any(|w| !(w[1].0 > w[0].0)) || period_s.is_some_and(|p| !(p > 0.0)) {
                    return Err(VisibilityError::InvalidSchedule);
                }
                entries.iter().try_for_each(|(_, m)| m.validate())
            }
        }
    }

    /// Canyon mask following the street heading of each route segment.
    /// `aspects` gives the wall height-to-width ratio per segment and is
    /// cycled when shorter than the route.
    pub fn street_canyon_route(route: &Route, aspects: &[f64], sector_count: usize, base_cutoff_rad: f64) -> Self {
        let loop_s: f64 = route.segments.iter().map(|s| s.duration_s).sum();
        let entries = route
            .heading_changes(loop_s)
            .into_iter()
            .enumerate()
            .map(|(i, (t, h))| {
                let aspect = if aspects.is_empty() { 0.0 } else { aspects[i % aspects.len()] };
                (t, VisibilityMask::street_canyon(h, aspect, sector_count, base_cutoff_rad))
            })
            .collect();
        MaskProfile::Schedule { entries, period_s: Some(loop_s) }
    }

    pub fn mask_at(&self, t: f64) -> &VisibilityMask {
        match self {
            MaskProfile::Fixed(m) => m,
            MaskProfile::Schedule { entries, period_s } => {
                let t = match period_s {
                    Some(p) => t.rem_euclid(*p),
                    None => t,
                };
                let idx = entries.partition_point(|(s, _)| *s <= t);
                &entries[idx.saturating_sub(1)].1
            }
        }
    }
}

pub fn visible_satellites(states: &[(SatId, EcefState)], rx_pos: &Vector3<f64>, mask: &VisibilityMask) -> Vec<SatId> {
    states
        .iter()
        .filter(|(_, st)| elevation_azimuth(&st.position_m, rx_pos).is_ok_and(|(el, az)| mask.admits(el, az)))
        .map(|(id, _)| id.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EpochClass {
    Ge4,
    OneToThree,
    Zero,
}

impl EpochClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EpochClass::Ge4 => "GE4",
            EpochClass::OneToThree => "ONE_TO_THREE",
            EpochClass::Zero => "ZERO",
        }
    }
}

pub fn classify_epoch(nsat: usize) -> EpochClass {
    match nsat {
        0 => EpochClass::Zero,
        1..=3 => EpochClass::OneToThree,
        _ => EpochClass::Ge4,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityRecord {
    pub t: f64,
    pub nsat: usize,
    pub visible_ids: Vec<SatId>,
    /// Absent below four satellites or when the geometry is singular.
    pub gdop: Option<f64>,
    pub class: EpochClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPercentages {
    pub ge4: f64,
    pub one_to_three: f64,
    pub zero: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdopBreakdown {
    pub below_four: f64,
    pub within_threshold: f64,
    pub above_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityReport {
    pub constellation: String,
    pub epoch_count: usize,
    pub gdop_threshold: f64,
    pub classes: ClassPercentages,
    pub gdop_breakdown: GdopBreakdown,
    /// Epochs with at least one satellite, i.e. a time solution is possible
    /// from a known position.
    pub timing_available_pct: f64,
}

impl AvailabilityReport {
    pub fn from_records(tag: &str, records: &[AvailabilityRecord], gdop_threshold: f64) -> Self {
        let n = records.len().max(1) as f64;
        let pct = |c: usize| c as f64 * 100.0 / n;
        let count = |f: &dyn Fn(&AvailabilityRecord) -> bool| records.iter().filter(|r| f(r)).count();
        let ge4 = count(&|r| r.class == EpochClass::Ge4);
        let mid = count(&|r| r.class == EpochClass::OneToThree);
        let zero = count(&|r| r.class == EpochClass::Zero);
        let good = count(&|r| r.nsat >= 4 && r.gdop.is_some_and(|g| g <= gdop_threshold));
        Self {
            constellation: tag.to_string(),
            epoch_count: records.len(),
            gdop_threshold,
            classes: ClassPercentages { ge4: pct(ge4), one_to_three: pct(mid), zero: pct(zero) },
            gdop_breakdown: GdopBreakdown { below_four: pct(mid + zero), within_threshold: pct(good), above_threshold: pct(ge4 - good) },
            timing_available_pct: pct(ge4 + mid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityRun {
    pub report: AvailabilityReport,
    pub records: Vec<AvailabilityRecord>,
}

impl AvailabilityRun {
    pub fn write_records_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{EPOCH_CSV_HEADER}")?;
        for r in &self.records {
            let gdop = r.gdop.map(|g| format!("{g:.6}")).unwrap_or_default();
            let ids: Vec<&str> = r.visible_ids.iter().map(|s| s.0.as_str()).collect();
            writeln!(w, "{},{},{},{},{}", r.t, r.nsat, r.class.as_str(), gdop, ids.join(";"))?;
        }
        Ok(())
    }
}

/// Epoch times `start + k * step` up to the trajectory end.
pub fn epoch_times(trajectory: &Trajectory, epoch_step: f64) -> Result<Vec<f64>, VisibilityError> {
    if !(epoch_step > 0.0) {
        return Err(VisibilityError::InvalidStep(epoch_step));
    }
    let (t0, t1) = (trajectory.start_time(), trajectory.end_time());
    let n = ((t1 - t0) / epoch_step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| t0 + k as f64 * epoch_step).collect())
}

pub fn availability_summary(
    constellation: &[OrbitElements],
    tag: &str,
    trajectory: &Trajectory,
    mask: &MaskProfile,
    epoch_step: f64,
    gdop_threshold: f64,
) -> Result<AvailabilityRun, VisibilityError> {
    mask.validate()?;
    let times = epoch_times(trajectory, epoch_step)?;
    let records = times
        .par_iter()
        .map(|&t| evaluate_epoch(constellation, trajectory.position_at(t), mask.mask_at(t), t))
        .collect::<Result<Vec<_>, _>>()?;
    let report = AvailabilityReport::from_records(tag, &records, gdop_threshold);
    Ok(AvailabilityRun { report, records })
}

pub fn availability_summary_default(
    constellation: &[OrbitElements],
    tag: &str,
    trajectory: &Trajectory,
    mask: &MaskProfile,
) -> Result<AvailabilityRun, VisibilityError> {
    availability_summary(constellation, tag, trajectory, mask, DEFAULT_EPOCH_STEP_S, DEFAULT_GDOP_THRESHOLD)
}

fn evaluate_epoch(
    constellation: &[OrbitElements],
    rx: Vector3<f64>,
    mask: &VisibilityMask,
    t: f64,
) -> Result<AvailabilityRecord, VisibilityError> {
    let mut ids = Vec::new();
    let mut positions = Vec::new();
    for el in constellation {
        let st = propagate(el, t);
        let (e, a) = elevation_azimuth(&st.position_m, &rx)?;
        if mask.admits(e, a) {
            ids.push(el.sat_id.clone());
            positions.push(st.position_m);
        }
    }
    let nsat = ids.len();
    let gdop = if nsat >= 4 { dop_at(&positions, &rx).ok().map(|d| d.gdop) } else { None };
    Ok(AvailabilityRecord { t, nsat, visible_ids: ids, gdop, class: classify_epoch(nsat) })
}

/// Class percentages per constellation, one column each.
pub fn availability_table(reports: &[AvailabilityReport]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<16}", "NSAT");
    for r in reports {
        let _ = write!(s, "{:>12}", r.constellation);
    }
    s.push('\n');
    type Column = fn(&AvailabilityReport) -> f64;
    let rows: [(&str, Column); 3] = [(">= 4", |r| r.classes.ge4), ("1 to 3", |r| r.classes.one_to_three), ("< 1", |r| r.classes.zero)];
    for (label, f) in rows {
        let _ = write!(s, "{label:<16}");
        for r in reports {
            let _ = write!(s, "{:>11.2}%", f(r));
        }
        s.push('\n');
    }
    s
}

/// GDOP breakdown per constellation.
pub fn gdop_table(reports: &[AvailabilityReport]) -> String {
    let thr = reports.first().map(|r| r.gdop_threshold).unwrap_or(DEFAULT_GDOP_THRESHOLD);
    let mut s = String::new();
    let _ = write!(s, "{:<16}", "GDOP");
    for r in reports {
        let _ = write!(s, "{:>12}", r.constellation);
    }
    s.push('\n');
    let labels = ["NSAT < 4".to_string(), format!("<= {thr}"), format!("> {thr}")];
    let rows: [fn(&AvailabilityReport) -> f64; 3] =
        [|r| r.gdop_breakdown.below_four, |r| r.gdop_breakdown.within_threshold, |r| r.gdop_breakdown.above_threshold];
    for (label, f) in labels.iter().zip(rows) {
        let _ = write!(s, "{label:<16}");
        for r in reports {
            let _ = write!(s, "{:>11.2}%", f(r));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_nominal_constellation, ConstellationSet};
    use crate::geo::{enu_offset, Geodetic};
    use proptest::prelude::*;

    fn brisbane() -> Vector3<f64> {
        Geodetic::from_degrees(-27.47, 153.03, 0.0).to_ecef()
    }

    fn sat_state(rx: &Vector3<f64>, el_deg: f64, az_deg: f64) -> (SatId, EcefState) {
        let (el, az) = (el_deg.to_radians(), az_deg.to_radians());
        let d = 20_000_000.0;
        let p = enu_offset(rx, d * el.cos() * az.sin(), d * el.cos() * az.cos(), d * el.sin());
        (SatId(format!("T{el_deg}-{az_deg}")), EcefState { position_m: p, velocity_m_per_s: Vector3::zeros(), t: 0.0 })
    }

    fn walls(ew_deg: f64, ns_deg: f64) -> VisibilityMask {
        let q = TAU / 8.0;
        let s = |a: f64, b: f64, e: f64| MaskSector { azimuth_start_rad: a * q, azimuth_end_rad: b * q, min_elevation_rad: e.to_radians() };
        VisibilityMask::new(
            vec![s(0.0, 1.0, ns_deg), s(1.0, 3.0, ew_deg), s(3.0, 5.0, ns_deg), s(5.0, 7.0, ew_deg), s(7.0, 8.0, ns_deg)],
            10f64.to_radians(),
        )
        .unwrap()
    }

    #[test]
    fn below_cutoff_is_excluded() {
        let rx = brisbane();
        let mask = VisibilityMask::open_sky(10f64.to_radians());
        assert!(visible_satellites(&[sat_state(&rx, 5.0, 30.0)], &rx, &mask).is_empty());
        assert_eq!(visible_satellites(&[sat_state(&rx, 89.999, 0.0)], &rx, &walls(80.0, 10.0)).len(), 1);
    }

    #[test]
    fn canyon_sectors() {
        let rx = brisbane();
        let mask = walls(80.0, 10.0);
        assert!(visible_satellites(&[sat_state(&rx, 45.0, 90.0)], &rx, &mask).is_empty());
        assert_eq!(visible_satellites(&[sat_state(&rx, 45.0, 0.0)], &rx, &mask).len(), 1);
    }

    #[test]
    fn classification_bins() {
        assert_eq!(classify_epoch(4), EpochClass::Ge4);
        assert_eq!(classify_epoch(2), EpochClass::OneToThree);
        assert_eq!(classify_epoch(0), EpochClass::Zero);
        assert_eq!(classify_epoch(3), EpochClass::OneToThree);
        assert_eq!(classify_epoch(1), EpochClass::OneToThree);
    }

    #[test]
    fn invalid_masks_rejected() {
        let base = 10f64.to_radians();
        let gap = vec![
            MaskSector { azimuth_start_rad: 0.0, azimuth_end_rad: 1.0, min_elevation_rad: base },
            MaskSector { azimuth_start_rad: 1.5, azimuth_end_rad: TAU, min_elevation_rad: base },
        ];
        assert!(matches!(VisibilityMask::new(gap, base), Err(VisibilityError::SectorCoverage(_))));
        let low = vec![MaskSector { azimuth_start_rad: 0.0, azimuth_end_rad: TAU, min_elevation_rad: 0.0 }];
        assert!(matches!(VisibilityMask::new(low, base), Err(VisibilityError::SectorBelowCutoff { .. })));
    }

    #[test]
    fn street_canyon_shape() {
        let m = VisibilityMask::street_canyon(0.0, 1.5, 36, 10f64.to_radians());
        m.validate().unwrap();
        // across the street: atan(3)
        assert!((m.min_elevation_at(FRAC_PI_2 + 0.01) - 3f64.atan()).abs() < 1e-12);
        assert!(m.min_elevation_at(0.01) < 0.6);
        // heading is a line, not a direction
        let flipped = VisibilityMask::street_canyon(std::f64::consts::PI, 1.5, 36, 10f64.to_radians());
        for (a, b) in m.sectors().iter().zip(flipped.sectors()) {
            assert!((a.min_elevation_rad - b.min_elevation_rad).abs() < 1e-12);
        }
    }

    #[test]
    fn max_abs_sin_matches_sampling() {
        for &(a, b) in &[(0.1, 0.3), (1.0, 2.0), (-0.2, 0.2), (3.0, 3.5), (4.0, 5.0), (-2.0, -1.4)] {
            let sampled = (0..=1000).map(|i| (a + (b - a) * i as f64 / 1000.0f64).sin().abs()).fold(0.0, f64::max);
            assert!((max_abs_sin(a, b) - sampled).abs() < 1e-5, "{a} {b}");
        }
    }

    #[test]
    fn schedule_lookup_wraps() {
        let a = VisibilityMask::open_sky(0.1);
        let b = VisibilityMask::open_sky(0.2);
        let p = MaskProfile::Schedule { entries: vec![(0.0, a.clone()), (10.0, b.clone())], period_s: Some(30.0) };
        p.validate().unwrap();
        assert_eq!(p.mask_at(5.0), &a);
        assert_eq!(p.mask_at(10.0), &b);
        assert_eq!(p.mask_at(31.0), &a);
    }

    #[test]
    fn open_sky_gps_always_four() {
        let gps = build_nominal_constellation(ConstellationSet::Gps, 0.0);
        let tr = Trajectory::stationary(brisbane(), 0.0, 86_400.0);
        let mask = MaskProfile::Fixed(VisibilityMask::open_sky(10f64.to_radians()));
        let run = availability_summary(&gps, "GPS", &tr, &mask, 60.0, 6.0).unwrap();
        assert_eq!(run.records.len(), 1441);
        assert_eq!(run.report.classes.ge4, 100.0);
        assert!(run.records.iter().all(|r| r.gdop.is_some()));
    }

    #[test]
    fn union_counts_add_up() {
        let tr = Trajectory::stationary(brisbane(), 0.0, 3_600.0);
        let mask = MaskProfile::Fixed(VisibilityMask::street_canyon(0.3, 1.2, 24, 10f64.to_radians()));
        let run = |set| availability_summary(&build_nominal_constellation(set, 0.0), "x", &tr, &mask, 120.0, 6.0).unwrap();
        let (g, b, u) = (run(ConstellationSet::Gps), run(ConstellationSet::Bds), run(ConstellationSet::GpsPlusBds));
        for ((g, b), u) in g.records.iter().zip(&b.records).zip(&u.records) {
            assert_eq!(u.nsat, g.nsat + b.nsat);
        }
        assert!(u.report.classes.ge4 >= g.report.classes.ge4.max(b.report.classes.ge4));
        assert!(u.report.classes.zero <= g.report.classes.zero.min(b.report.classes.zero));
    }

    #[test]
    fn records_csv_shape() {
        let gps = build_nominal_constellation(ConstellationSet::Gps, 0.0);
        let tr = Trajectory::stationary(brisbane(), 0.0, 20.0);
        let mask = MaskProfile::Fixed(VisibilityMask::open_sky(10f64.to_radians()));
        let run = availability_summary(&gps, "GPS", &tr, &mask, 10.0, 6.0).unwrap();
        let mut buf = Vec::new();
        run.write_records_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], EPOCH_CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
        assert!(availability_summary(&gps, "GPS", &tr, &mask, 0.0, 6.0).is_err());
        let table = availability_table(std::slice::from_ref(&run.report));
        assert!(table.contains("100.00%"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn partitions_sum_to_hundred(aspect in 0.0f64..4.0, heading in 0.0f64..TAU, t0 in 0.0f64..86_400.0) {
            let tr = Trajectory::stationary(brisbane(), t0, t0 + 1_800.0);
            let mask = MaskProfile::Fixed(VisibilityMask::street_canyon(heading, aspect, 18, 10f64.to_radians()));
            let sats = build_nominal_constellation(ConstellationSet::GpsPlusBds, 0.0);
            let r = availability_summary(&sats, "x", &tr, &mask, 300.0, 6.0).unwrap().report;
            let c = r.classes;
            let g = r.gdop_breakdown;
            prop_assert!((c.ge4 + c.one_to_three + c.zero - 100.0).abs() < 1e-9);
            prop_assert!((g.below_four + g.within_threshold + g.above_threshold - 100.0).abs() < 1e-9);
            prop_assert!(r.timing_available_pct >= g.within_threshold);
        }

        #[test]
        fn raising_mask_never_adds(aspect in 0.0f64..3.0, heading in 0.0f64..TAU, delta in 0.0f64..0.5, t in 0.0f64..86_400.0) {
            let mask = VisibilityMask::street_canyon(heading, aspect, 12, 10f64.to_radians());
            let higher = mask.raised(delta);
            let rx = brisbane();
            let states: Vec<_> = build_nominal_constellation(ConstellationSet::GpsPlusBds, 0.0)
                .iter()
                .map(|e| (e.sat_id.clone(), propagate(e, t)))
                .collect();
            let lo = visible_satellites(&states, &rx, &mask);
            let hi = visible_satellites(&states, &rx, &higher);
            prop_assert!(hi.len() <= lo.len());
            prop_assert!(hi.iter().all(|id| lo.contains(id)));
        }
    }
}
