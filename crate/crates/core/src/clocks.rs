//! Node clocks, GPS → UTC time transfer, 1 PPS error processes and
//! GNSS-disciplined clocks.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::OffsetSeries;
use crate::rng::{derive_seed, seeded_rng};

/// GPS − UTC in whole seconds at the time of writing.
pub const DEFAULT_LEAP_SECONDS: f64 = 18.0;
/// Receiver clock bias magnitude that triggers a clock step, s.
pub const DEFAULT_ADJUST_LIMIT_S: f64 = 0.1;
/// Bound on |drift_rate − 1| accepted for a quartz clock.
pub const MAX_SKEW: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClockError {
    #[error("drift rate {0} is outside 1 ± {MAX_SKEW}")]
    DriftOutOfRange(f64),
    #[error("degenerate clock: drift rate is zero")]
    DegenerateClock,
    #[error("invalid PPS model: {0}")]
    InvalidPps(String),
    #[error("PPS event series is empty")]
    EmptyPps,
}

/// Affine clock `C(t) = drift_rate · t + offset_s` against true time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartzClock {
    pub node_id: u32,
    pub drift_rate: f64,
    pub offset_s: f64,
}

impl QuartzClock {
    pub fn new(node_id: u32, drift_rate: f64, offset_s: f64) -> Result<Self, ClockError> {
        if !((drift_rate - 1.0).abs() <= MAX_SKEW) {
            return Err(ClockError::DriftOutOfRange(drift_rate));
        }
        Ok(Self { node_id, drift_rate, offset_s })
    }

    pub fn perfect(node_id: u32) -> Self {
        Self { node_id, drift_rate: 1.0, offset_s: 0.0 }
    }

    pub fn skew(&self) -> f64 {
        self.drift_rate - 1.0
    }

    pub fn read(&self, t_true: f64) -> f64 {
        read_clock(self, t_true)
    }

    /// True time at which this clock shows `reading`.
    pub fn true_time_of(&self, reading: f64) -> f64 {
        (reading - self.offset_s) / self.drift_rate
    }
}

pub fn read_clock(clock: &QuartzClock, t_true: f64) -> f64 {
    clock.drift_rate * t_true + clock.offset_s
}

/// Receiver time, GPS time and UTC linked by the receiver clock bias and the
/// GPS − UTC offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeTransfer {
    pub t_r: f64,
    pub delta_t_r: f64,
    pub delta_t_utc: f64,
    pub t_gps: f64,
    pub t_utc: f64,
}

/// `t_gps = t_r − Δt_r`, `t_utc = t_r − Δt_r − Δt_utc`.
pub fn gps_to_utc(t_r: f64, delta_t_r: f64, delta_t_utc: f64) -> TimeTransfer {
    let t_gps = t_r - delta_t_r;
    TimeTransfer { t_r, delta_t_r, delta_t_utc, t_gps, t_utc: t_gps - delta_t_utc }
}

/// Receiver reading that corresponds to `t_utc`; inverse of [`gps_to_utc`].
pub fn receiver_time_from_utc(t_utc: f64, delta_t_r: f64, delta_t_utc: f64) -> f64 {
    t_utc + delta_t_utc + delta_t_r
}

/// `C₁(t) = theta · C₂(t) + beta_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeClockParams {
    pub theta: f64,
    pub beta_s: f64,
}

pub fn relative_clock_params(c1: &QuartzClock, c2: &QuartzClock) -> Result<RelativeClockParams, ClockError> {
    if c2.drift_rate == 0.0 {
        return Err(ClockError::DegenerateClock);
    }
    let theta = c1.drift_rate / c2.drift_rate;
    Ok(RelativeClockParams { theta, beta_s: c1.offset_s - theta * c2.offset_s })
}

/// Error of each 1 PPS edge: constant bias, a slowly wandering first-order
/// autoregressive drift, and white per-pulse jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpsErrorModel {
    pub bias_ns: f64,
    /// Stationary standard deviation of the drift process, ns.
    pub drift_amplitude_ns: f64,
    pub drift_correlation_s: f64,
    pub jitter_std_ns: f64,
    /// Receivers sharing a drift seed see the same drift realization.
    pub drift_seed: u64,
    pub jitter_seed: u64,
}

impl PpsErrorModel {
    pub fn constant(bias_ns: f64) -> Self {
        Self { bias_ns, drift_amplitude_ns: 0.0, drift_correlation_s: 1.0, jitter_std_ns: 0.0, drift_seed: 0, jitter_seed: 0 }
    }

    pub fn validate(&self) -> Result<(), ClockError> {
        if !(self.jitter_std_ns >= 0.0) {
            return Err(ClockError::InvalidPps(format!("jitter std {} must be >= 0", self.jitter_std_ns)));
        }
        if !(self.drift_amplitude_ns >= 0.0) {
            return Err(ClockError::InvalidPps(format!("drift amplitude {} must be >= 0", self.drift_amplitude_ns)));
        }
        if !(self.drift_correlation_s > 0.0) {
            return Err(ClockError::InvalidPps(format!("drift correlation time {} must be > 0", self.drift_correlation_s)));
        }
        if !self.bias_ns.is_finite() {
            return Err(ClockError::InvalidPps("bias must be finite".into()));
        }
        Ok(())
    }

    /// Edge errors of pulses `0..n` at `rate_hz`, ns.
    pub fn offsets(&self, n: usize, rate_hz: f64) -> Result<Vec<f64>, ClockError> {
        self.validate()?;
        if !(rate_hz > 0.0) {
            return Err(ClockError::InvalidPps(format!("pulse rate {rate_hz} must be > 0")));
        }
        let phi = (-1.0 / (rate_hz * self.drift_correlation_s)).exp();
        let innovation = self.drift_amplitude_ns * (1.0 - phi * phi).sqrt();
        let mut drift_rng = seeded_rng(self.drift_seed);
        let mut jitter_rng = seeded_rng(self.jitter_seed);
        let jitter = Normal::new(0.0, self.jitter_std_ns).map_err(|e| ClockError::InvalidPps(e.to_string()))?;
        let mut x = self.drift_amplitude_ns * drift_rng.sample::<f64, _>(StandardNormal);
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                x = phi * x + innovation * drift_rng.sample::<f64, _>(StandardNormal);
            }
            out.push(self.bias_ns + x + jitter.sample(&mut jitter_rng));
        }
        Ok(out)
    }
}

/// Edge error of pulse `pulse_index` for a 1 Hz PPS, ns.
///
/// Replays the generator from pulse 0; use [`PpsErrorModel::offsets`] for series.
pub fn pps_offset_at(model: &PpsErrorModel, pulse_index: usize) -> Result<f64, ClockError> {
    Ok(model.offsets(pulse_index + 1, 1.0)?[pulse_index])
}

/// Per-pulse difference `a − b` at `t = k / rate_hz`.
pub fn pairwise_pps_series(
    model_a: &PpsErrorModel,
    model_b: &PpsErrorModel,
    n_pulses: usize,
    rate_hz: f64,
) -> Result<OffsetSeries, ClockError> {
    if n_pulses == 0 {
        return Err(ClockError::EmptyPps);
    }
    let a = model_a.offsets(n_pulses, rate_hz)?;
    let b = model_b.offsets(n_pulses, rate_hz)?;
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(OffsetSeries::from_offsets(&diff, rate_hz, "pairwise pps"))
}

/// Receiver pairings with calibrated PPS statistics.
///
/// `SameModel`: two receivers of one model; drift is common and cancels,
/// 9 ns independent jitter each. `DiffModel`: receivers from two vendors;
/// 20 ns jitter each, independent drift wandering over a 2 h correlation
/// time, and a small vendor bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PpsPreset {
    SameModel,
    DiffModel,
}

impl PpsPreset {
    pub const ALL: [PpsPreset; 2] = [PpsPreset::SameModel, PpsPreset::DiffModel];

    pub fn name(self) -> &'static str {
        match self {
            PpsPreset::SameModel => "same-model",
            PpsPreset::DiffModel => "diff-model",
        }
    }

    /// PPS model for receiver `index` of a fleet using this preset.
    ///
    /// In `DiffModel` even indices are vendor A and odd indices vendor B.
    pub fn model_for(self, index: usize, seed: u64) -> PpsErrorModel {
        let jitter_seed = derive_seed(seed, &format!("pps-jitter-{index}"));
        match self {
            PpsPreset::SameModel => PpsErrorModel {
                bias_ns: 0.0,
                drift_amplitude_ns: 5.0,
                drift_correlation_s: 1800.0,
                jitter_std_ns: 9.0,
                drift_seed: derive_seed(seed, "pps-drift-common"),
                jitter_seed,
            },
            PpsPreset::DiffModel => PpsErrorModel {
                bias_ns: if index.is_multiple_of(2) { 1.5 } else { -1.5 },
                drift_amplitude_ns: 6.0,
                drift_correlation_s: 7200.0,
                jitter_std_ns: 20.0,
                drift_seed: derive_seed(seed, &format!("pps-drift-{index}")),
                jitter_seed,
            },
        }
    }

    pub fn pair(self, seed: u64) -> (PpsErrorModel, PpsErrorModel) {
        (self.model_for(0, seed), self.model_for(1, seed))
    }
}

impl std::str::FromStr for PpsPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "same-model" => Ok(PpsPreset::SameModel),
            "diff-model" => Ok(PpsPreset::DiffModel),
            other => Err(format!("unknown PPS preset `{other}` (known: same-model, diff-model)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisciplineConfig {
    /// Step the receiver clock when its bias magnitude reaches this, s.
    pub adjust_limit_s: f64,
    /// Skew estimate (e.g. from Doppler) used to rate-correct between pulses.
    /// `None` lets the clock free-run at its own rate.
    pub skew_estimate: Option<f64>,
}

impl Default for DisciplineConfig {
    fn default() -> Self {
        Self { adjust_limit_s: DEFAULT_ADJUST_LIMIT_S, skew_estimate: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PulseUpdate {
    /// Nominal second the pulse marks (true time).
    t_nominal: f64,
    /// Instant the edge actually occurs.
    t_edge: f64,
    /// Raw reading at the edge, after any step applied there.
    raw_at_edge: f64,
    /// Cumulative raw-clock steps up to and including this pulse.
    cumulative_step: f64,
}

/// A quartz clock corrected at every PPS edge.
///
/// Between edges the corrected time advances with the raw clock (optionally
/// scaled by a skew estimate). The raw clock itself is stepped back onto GPS
/// time when its bias reaches the adjust limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisciplinedClock {
    clock: QuartzClock,
    config: DisciplineConfig,
    updates: Vec<PulseUpdate>,
    steps: usize,
}

/// Disciplines `clock` with PPS edges at the series timestamps (true time,
/// s) carrying edge errors `offset_ns`.
pub fn discipline_clock(clock: &QuartzClock, pps_events: &OffsetSeries, adjust_limit_s: f64) -> Result<DisciplinedClock, ClockError> {
    discipline_clock_with(clock, pps_events, &DisciplineConfig { adjust_limit_s, skew_estimate: None })
}

pub fn discipline_clock_with(
    clock: &QuartzClock,
    pps_events: &OffsetSeries,
    config: &DisciplineConfig,
) -> Result<DisciplinedClock, ClockError> {
    if pps_events.is_empty() {
        return Err(ClockError::EmptyPps);
    }
    let mut updates = Vec::with_capacity(pps_events.len());
    let mut cumulative = 0.0;
    let mut steps = 0;
    for &(t_nominal, offset_ns) in pps_events.samples() {
        let t_edge = t_nominal + offset_ns * 1e-9;
        let raw = clock.read(t_edge) + cumulative;
        let bias = raw - t_nominal;
        let (raw_at_edge, step) = if bias.abs() >= config.adjust_limit_s {
            steps += 1;
            (raw - bias, -bias)
        } else {
            (raw, 0.0)
        };
        cumulative += step;
        updates.push(PulseUpdate { t_nominal, t_edge, raw_at_edge, cumulative_step: cumulative });
    }
    Ok(DisciplinedClock { clock: *clock, config: *config, updates, steps })
}

impl DisciplinedClock {
    fn last_update(&self, t: f64) -> Option<&PulseUpdate> {
        let idx = self.updates.partition_point(|u| u.t_edge <= t);
        idx.checked_sub(1).map(|i| &self.updates[i])
    }

    /// Raw receiver clock reading, including steps applied so far.
    pub fn raw_time(&self, t: f64) -> f64 {
        let step = self.last_update(t).map_or(0.0, |u| u.cumulative_step);
        self.clock.read(t) + step
    }

    pub fn corrected_time(&self, t: f64) -> f64 {
        match self.last_update(t) {
            None => self.raw_time(t),
            Some(u) => {
                let elapsed_raw = self.raw_time(t) - u.raw_at_edge;
                let scale = self.config.skew_estimate.map_or(1.0, |s| 1.0 / (1.0 + s));
                u.t_nominal + elapsed_raw * scale
            }
        }
    }

    /// `corrected_time(t) − t`, s.
    pub fn error_at(&self, t: f64) -> f64 {
        self.corrected_time(t) - t
    }

    pub fn step_count(&self) -> usize {
        self.steps
    }

    pub fn pulse_count(&self) -> usize {
        self.updates.len()
    }

    pub fn last_pulse_time(&self) -> Option<f64> {
        self.updates.last().map(|u| u.t_edge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{offset_statistics, OffsetSeries};
    use proptest::prelude::*;

    #[test]
    fn reading_examples() {
        let perfect = QuartzClock::perfect(0);
        for t in [0.0, 1.5, 86_400.0] {
            assert_eq!(perfect.read(t), t);
        }
        let fast = QuartzClock::new(1, 1.0 + 1e-7, 0.0).unwrap();
        assert!((fast.read(3600.0) - 3600.00036).abs() < 1e-9);
        let shifted = QuartzClock::new(2, 1.0, 5e-3).unwrap();
        assert_eq!(shifted.read(10.0), 10.005);
        assert!(QuartzClock::new(3, 1.001, 0.0).is_err());
        assert!((fast.true_time_of(fast.read(1234.5)) - 1234.5).abs() < 1e-12);
    }

    #[test]
    fn time_transfer_examples() {
        assert_eq!(gps_to_utc(1000.0, 0.0, 18.0).t_utc, 982.0);
        let tt = gps_to_utc(1000.05, 0.05, 18.0);
        assert_eq!(tt.t_utc, 982.0);
        assert_eq!(tt.t_gps, 1000.0);
        assert_eq!(gps_to_utc(123.456, 0.0, 0.0).t_utc, 123.456);
    }

    #[test]
    fn relative_params_examples() {
        let a = QuartzClock::new(0, 1.0 + 2e-6, 0.3).unwrap();
        let p = relative_clock_params(&a, &a).unwrap();
        assert_eq!((p.theta, p.beta_s), (1.0, 0.0));
        let b = QuartzClock::new(1, 1.0 + 2e-6, 0.3).unwrap();
        let p = relative_clock_params(&a, &b).unwrap();
        assert_eq!((p.theta, p.beta_s), (1.0, 0.0));
        let c1 = QuartzClock::new(0, 1.0 + 1e-7, 0.0).unwrap();
        let c2 = QuartzClock::new(1, 1.0 - 1e-7, 0.0).unwrap();
        let p = relative_clock_params(&c1, &c2).unwrap();
        assert_eq!(p.theta, (1.0 + 1e-7) / (1.0 - 1e-7));
        assert_eq!(p.beta_s, 0.0);
        let zero = QuartzClock { node_id: 9, drift_rate: 0.0, offset_s: 0.0 };
        assert_eq!(relative_clock_params(&c1, &zero), Err(ClockError::DegenerateClock));
    }

    #[test]
    fn equal_bias_different_drift_bound() {
        let b = 2e-3;
        let c1 = QuartzClock::new(0, 1.0 + 3e-6, b).unwrap();
        let c2 = QuartzClock::new(1, 1.0 - 1e-6, b).unwrap();
        let p = relative_clock_params(&c1, &c2).unwrap();
        assert!(p.beta_s.abs() <= b.abs() * (1.0 - c1.drift_rate / c2.drift_rate).abs() * (1.0 + 1e-9));
        assert!(p.beta_s != 0.0);
    }

    #[test]
    fn constant_bias_pps() {
        let m = PpsErrorModel::constant(10.0);
        assert!(m.offsets(100, 1.0).unwrap().iter().all(|&o| o == 10.0));
        assert_eq!(pps_offset_at(&m, 57).unwrap(), 10.0);
    }

    #[test]
    fn jitter_std_is_recovered() {
        let m = PpsErrorModel { jitter_std_ns: 12.0, jitter_seed: 8, ..PpsErrorModel::constant(0.0) };
        let v = m.offsets(86_400, 1.0).unwrap();
        let st = offset_statistics(&OffsetSeries::from_offsets(&v, 1.0, "j")).unwrap();
        assert!((st.std_ns / 12.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn shared_drift_cancels_in_difference() {
        let base = PpsErrorModel {
            bias_ns: 0.0,
            drift_amplitude_ns: 25.0,
            drift_correlation_s: 600.0,
            jitter_std_ns: 9.0,
            drift_seed: 4,
            jitter_seed: 1,
        };
        let other = PpsErrorModel { jitter_seed: 2, ..base };
        let s = pairwise_pps_series(&base, &other, 86_400, 1.0).unwrap();
        let st = offset_statistics(&s).unwrap();
        assert!((st.std_ns / (9.0 * 2f64.sqrt()) - 1.0).abs() < 0.05, "{}", st.std_ns);
        let same = pairwise_pps_series(&base, &base, 1000, 1.0).unwrap();
        assert!(same.offsets().all(|o| o == 0.0));
    }

    #[test]
    fn offset_at_matches_series() {
        let m = PpsPreset::DiffModel.model_for(3, 99);
        let series = m.offsets(50, 1.0).unwrap();
        assert_eq!(pps_offset_at(&m, 49).unwrap(), series[49]);
        assert_eq!(pps_offset_at(&m, 0).unwrap(), series[0]);
    }

    #[test]
    fn invalid_models_rejected() {
        let bad = PpsErrorModel { jitter_std_ns: -1.0, ..PpsErrorModel::constant(0.0) };
        assert!(bad.offsets(3, 1.0).is_err());
        let bad = PpsErrorModel { drift_correlation_s: 0.0, ..PpsErrorModel::constant(0.0) };
        assert!(bad.validate().is_err());
        assert_eq!(pairwise_pps_series(&bad, &bad, 0, 1.0).unwrap_err(), ClockError::EmptyPps);
    }

    fn perfect_pps(n: usize, start: f64) -> OffsetSeries {
        OffsetSeries::new((0..n).map(|k| (start + k as f64, 0.0)).collect(), "perfect").unwrap()
    }

    #[test]
    fn perfect_clock_perfect_pps() {
        let d = discipline_clock(&QuartzClock::perfect(0), &perfect_pps(100, 0.0), 0.1).unwrap();
        for k in 0..1000 {
            let t = k as f64 * 0.0997;
            assert!(d.error_at(t).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_bounded_between_pulses() {
        let c = QuartzClock::new(0, 1.0 + 1e-7, 0.02).unwrap();
        let d = discipline_clock(&c, &perfect_pps(600, 1.0), 0.1).unwrap();
        let mut worst = 0.0f64;
        for k in 0..6000 {
            let t = 1.0 + k as f64 * 0.1 + 0.05;
            if t < 600.0 {
                worst = worst.max(d.error_at(t).abs());
            }
        }
        assert!(worst <= 100e-9 + 1e-12, "{worst}");
        assert!(worst > 90e-9);
    }

    #[test]
    fn free_run_after_lock_loss() {
        let c = QuartzClock::new(0, 1.0 + 1e-7, 0.0).unwrap();
        let d = discipline_clock(&c, &perfect_pps(10, 0.0), 0.1).unwrap();
        let err = d.error_at(9.0 + 1000.0);
        assert!((err - 100e-6).abs() < 1e-9, "{err}");
    }

    #[test]
    fn skew_estimate_removes_drift() {
        let c = QuartzClock::new(0, 1.0 + 1e-7, 0.0).unwrap();
        let cfg = DisciplineConfig { skew_estimate: Some(1e-7), ..Default::default() };
        let d = discipline_clock_with(&c, &perfect_pps(10, 0.0), &cfg).unwrap();
        assert!(d.error_at(9.0 + 1000.0).abs() < 1e-12);
    }

    #[test]
    fn large_bias_is_stepped() {
        let c = QuartzClock::new(0, 1.0 + 5e-5, 0.25).unwrap();
        let d = discipline_clock(&c, &perfect_pps(5000, 0.0), 0.1).unwrap();
        assert!(d.step_count() >= 1);
        // stepping keeps the raw clock within the limit plus one interval of drift
        for k in 0..5000 {
            let t = k as f64 + 0.5;
            assert!((d.raw_time(t) - t).abs() < 0.1 + 1e-4);
            assert!(d.error_at(t).abs() < 5e-5 + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn relative_closure(d1 in -1e-4f64..1e-4, d2 in -1e-4f64..1e-4, b1 in -1.0f64..1.0, b2 in -1.0f64..1.0, t in -1e6f64..1e6) {
            let c1 = QuartzClock::new(0, 1.0 + d1, b1).unwrap();
            let c2 = QuartzClock::new(1, 1.0 + d2, b2).unwrap();
            let p = relative_clock_params(&c1, &c2).unwrap();
            let lhs = c1.read(t);
            let rhs = p.theta * c2.read(t) + p.beta_s;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * t.abs().max(1.0));
        }

        #[test]
        fn time_transfer_round_trip(tr in -1_000_000i64..1_000_000, dr in -100_000i64..100_000, leap in 0i64..40) {
            // dyadic inputs keep the arithmetic exact
            let t_r = tr as f64 / 1024.0;
            let d_r = dr as f64 / 1024.0;
            let tt = gps_to_utc(t_r, d_r, leap as f64);
            prop_assert_eq!(receiver_time_from_utc(tt.t_utc, d_r, leap as f64), t_r);
            prop_assert_eq!(tt.t_r - tt.t_gps, d_r);
        }

        #[test]
        fn disciplined_error_bounded(skew in -1e-6f64..1e-6, bias in -0.05f64..0.05, jitter in 0.0f64..50.0, seed in 0u64..1000) {
            let c = QuartzClock::new(0, 1.0 + skew, bias).unwrap();
            let m = PpsErrorModel { jitter_std_ns: jitter, jitter_seed: seed, ..PpsErrorModel::constant(0.0) };
            let pps = pairwise_pps_series(&m, &PpsErrorModel::constant(0.0), 200, 1.0).unwrap();
            let max_pps = pps.offsets().fold(0.0f64, |a, o| a.max(o.abs())) * 1e-9;
            let d = discipline_clock(&c, &pps, 0.1).unwrap();
            let first = pps.samples()[0].0 + max_pps;
            let mut worst = 0.0f64;
            for k in 0..1990 {
                let t = first + k as f64 * 0.1;
                worst = worst.max(d.error_at(t).abs());
            }
            prop_assert!(worst <= max_pps + skew.abs() * 1.0 + 1e-12, "{} > {}", worst, max_pps + skew.abs());
        }
    }
}
