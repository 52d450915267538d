//! Pseudorange / range-rate synthesis and the epoch-by-epoch least-squares
//! position, velocity and time solution.
//!
//! The clock bias is carried in range units (metres) while solving and
//! converted to seconds at the boundary. DOP values are expressed in the
//! local east-north-up frame at the receiver estimate.

use nalgebra::{DMatrix, DVector, Matrix4, Vector3, Vector4};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constellation::{EcefState, SatId, SatelliteClock};
use crate::geo::ecef_to_enu_rotation;
use crate::rng::seeded_rng;
use crate::SPEED_OF_LIGHT;

/// Default GDOP acceptance threshold for a usable PVT solution.
pub const DEFAULT_GDOP_THRESHOLD: f64 = 6.0;

/// Eigenvalue ratio of HᵀH below which the geometry is treated as singular.
const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("insufficient satellites: have {have}, need {need}")]
    InsufficientSatellites { have: usize, need: usize },
    #[error("least squares did not converge after {iterations} iterations (last update {last_update_m:.3e} m)")]
    NonConvergence { iterations: usize, last_update_m: f64 },
    #[error("satellite geometry is singular")]
    GeometrySingular,
    #[error("degenerate geometry: satellite coincides with receiver estimate")]
    DegenerateGeometry,
    #[error("invalid noise parameter: {0}")]
    InvalidNoise(String),
    #[error("velocity solve requires a valid position solution")]
    InvalidSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementNoiseModel {
    /// User range error standard deviation, m.
    pub sigma_pseudorange_m: f64,
    /// Range-rate standard deviation, m/s.
    pub sigma_doppler_mps: f64,
    pub seed: u64,
}

impl MeasurementNoiseModel {
    pub fn noiseless() -> Self {
        Self { sigma_pseudorange_m: 0.0, sigma_doppler_mps: 0.0, seed: 0 }
    }

    fn check(&self) -> Result<(), EstimationError> {
        if !(self.sigma_pseudorange_m >= 0.0) || !(self.sigma_doppler_mps >= 0.0) {
            return Err(EstimationError::InvalidNoise(format!(
                "sigmas must be non-negative (got {} m, {} m/s)",
                self.sigma_pseudorange_m, self.sigma_doppler_mps
            )));
        }
        Ok(())
    }
}

/// One tracked satellite as seen by the measurement simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteObservable {
    pub sat_id: SatId,
    pub state: EcefState,
    pub clock: SatelliteClock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub sat_id: SatId,
    pub pseudorange_m: f64,
    pub range_rate_mps: f64,
    pub sat: EcefState,
    pub sat_clock: SatelliteClock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudorangeSet {
    pub measurements: Vec<Measurement>,
}

impl PseudorangeSet {
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    fn sat_positions(&self) -> Vec<Vector3<f64>> {
        self.measurements.iter().map(|m| m.sat.position_m).collect()
    }
}

/// True receiver state used to synthesize measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverTruth {
    pub position_m: Vector3<f64>,
    pub velocity_mps: Vector3<f64>,
    pub clock_bias_s: f64,
    /// Clock drift, s/s.
    pub clock_drift: f64,
}

impl ReceiverTruth {
    pub fn at_rest(position_m: Vector3<f64>, clock_bias_s: f64) -> Self {
        Self { position_m, velocity_mps: Vector3::zeros(), clock_bias_s, clock_drift: 0.0 }
    }
}

/// Pseudoranges and range-rates for `sats`, seeded from `noise.seed`.
pub fn simulate_pseudoranges(
    truth: &ReceiverTruth,
    sats: &[SatelliteObservable],
    noise: &MeasurementNoiseModel,
) -> Result<PseudorangeSet, EstimationError> {
    let mut rng = seeded_rng(noise.seed);
    simulate_pseudoranges_with(truth, sats, noise.sigma_pseudorange_m, noise.sigma_doppler_mps, &mut rng)
}

/// As [`simulate_pseudoranges`] but drawing noise from a caller-owned RNG.
///
/// Pseudorange = geometric range + c·(receiver bias − satellite offset) + noise.
/// Range-rate = line-of-sight projection of the relative velocity + c·drift + noise.
pub fn simulate_pseudoranges_with<R: Rng + ?Sized>(
    truth: &ReceiverTruth,
    sats: &[SatelliteObservable],
    sigma_p_m: f64,
    sigma_d_mps: f64,
    rng: &mut R,
) -> Result<PseudorangeSet, EstimationError> {
    if sats.is_empty() {
        return Err(EstimationError::InsufficientSatellites { have: 0, need: 1 });
    }
    MeasurementNoiseModel { sigma_pseudorange_m: sigma_p_m, sigma_doppler_mps: sigma_d_mps, seed: 0 }.check()?;
    let np = Normal::new(0.0, sigma_p_m).map_err(|e| EstimationError::InvalidNoise(e.to_string()))?;
    let nd = Normal::new(0.0, sigma_d_mps).map_err(|e| EstimationError::InvalidNoise(e.to_string()))?;
    let mut measurements = Vec::with_capacity(sats.len());
    for s in sats {
        let los = s.state.position_m - truth.position_m;
        let range = los.norm();
        if range == 0.0 {
            return Err(EstimationError::DegenerateGeometry);
        }
        let e = los / range;
        let pr = range + SPEED_OF_LIGHT * (truth.clock_bias_s - s.clock.offset_s) + np.sample(rng);
        let rr = e.dot(&(s.state.velocity_m_per_s - truth.velocity_mps)) + SPEED_OF_LIGHT * truth.clock_drift + nd.sample(rng);
        measurements.push(Measurement {
            sat_id: s.sat_id.clone(),
            pseudorange_m: pr,
            range_rate_mps: rr,
            sat: s.state,
            sat_clock: s.clock,
        });
    }
    Ok(PseudorangeSet { measurements })
}

/// Linearized observation matrix: row `i` is `(−ê_i, 1)` where `ê_i` is the
/// unit line-of-sight vector from the receiver estimate to satellite `i`.
pub fn design_matrix(sat_positions: &[Vector3<f64>], rx_pos_est: &Vector3<f64>) -> Result<DMatrix<f64>, EstimationError> {
    if sat_positions.is_empty() {
        return Err(EstimationError::InsufficientSatellites { have: 0, need: 1 });
    }
    let mut h = DMatrix::zeros(sat_positions.len(), 4);
    for (i, s) in sat_positions.iter().enumerate() {
        let los = s - rx_pos_est;
        let r = los.norm();
        if r == 0.0 {
            return Err(EstimationError::DegenerateGeometry);
        }
        let e = los / r;
        h[(i, 0)] = -e.x;
        h[(i, 1)] = -e.y;
        h[(i, 2)] = -e.z;
        h[(i, 3)] = 1.0;
    }
    Ok(h)
}

/// Design matrix with the position columns rotated into local ENU at `rx_pos_est`.
pub fn design_matrix_enu(sat_positions: &[Vector3<f64>], rx_pos_est: &Vector3<f64>) -> Result<DMatrix<f64>, EstimationError> {
    let mut h = design_matrix(sat_positions, rx_pos_est)?;
    let rot = ecef_to_enu_rotation(rx_pos_est);
    for mut row in h.row_iter_mut() {
        let v = rot * Vector3::new(row[0], row[1], row[2]);
        row[0] = v.x;
        row[1] = v.y;
        row[2] = v.z;
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopValues {
    pub gdop: f64,
    pub pdop: f64,
    pub tdop: f64,
    pub hdop: f64,
    pub vdop: f64,
}

fn normal_matrix(h: &DMatrix<f64>) -> Result<Matrix4<f64>, EstimationError> {
    if h.ncols() != 4 {
        return Err(EstimationError::GeometrySingular);
    }
    if h.nrows() < 4 {
        return Err(EstimationError::InsufficientSatellites { have: h.nrows(), need: 4 });
    }
    let hth = h.transpose() * h;
    Ok(Matrix4::from_iterator(hth.iter().copied()))
}

fn checked_inverse(n: &Matrix4<f64>) -> Result<Matrix4<f64>, EstimationError> {
    let eig = n.symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(max > 0.0) || min <= SINGULAR_RATIO * max {
        return Err(EstimationError::GeometrySingular);
    }
    n.try_inverse().ok_or(EstimationError::GeometrySingular)
}

/// DOP values from a design matrix. HDOP/VDOP take the first three columns
/// as east, north, up; use [`design_matrix_enu`] for that.
pub fn dop(h: &DMatrix<f64>) -> Result<DopValues, EstimationError> {
    let q = checked_inverse(&normal_matrix(h)?)?;
    let (qe, qn, qu, qt) = (q[(0, 0)], q[(1, 1)], q[(2, 2)], q[(3, 3)]);
    Ok(DopValues {
        gdop: (qe + qn + qu + qt).sqrt(),
        pdop: (qe + qn + qu).sqrt(),
        tdop: qt.sqrt(),
        hdop: (qe + qn).sqrt(),
        vdop: qu.sqrt(),
    })
}

/// DOP for satellites at `sat_positions` seen from `rx_pos`, in local ENU.
pub fn dop_at(sat_positions: &[Vector3<f64>], rx_pos: &Vector3<f64>) -> Result<DopValues, EstimationError> {
    dop(&design_matrix_enu(sat_positions, rx_pos)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Stop when the position update norm falls below this, m.
    pub tol_m: f64,
    pub gdop_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iter: 20, tol_m: 1e-4, gdop_threshold: DEFAULT_GDOP_THRESHOLD }
    }
}

/// Starting point for Gauss-Newton; the default (earth centre, zero bias)
/// converges for receivers near the surface.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialGuess {
    pub position_m: Vector3<f64>,
    pub clock_bias_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvtSolution {
    pub position_m: Vector3<f64>,
    pub clock_bias_s: f64,
    pub velocity_mps: Vector3<f64>,
    pub clock_drift_s_per_s: f64,
    pub dop: DopValues,
    /// `nsat >= 4` and GDOP within the configured threshold.
    pub valid: bool,
    pub nsat: usize,
    pub iterations: usize,
    pub residual_rms_m: f64,
}

fn residuals(meas: &PseudorangeSet, pos: &Vector3<f64>, bias_m: f64) -> DVector<f64> {
    DVector::from_iterator(
        meas.len(),
        meas.measurements.iter().map(|m| {
            let predicted = (m.sat.position_m - pos).norm() + bias_m - SPEED_OF_LIGHT * m.sat_clock.offset_s;
            m.pseudorange_m - predicted
        }),
    )
}

fn least_squares_step(h: &DMatrix<f64>, y: &DVector<f64>) -> Result<Vector4<f64>, EstimationError> {
    let q = checked_inverse(&normal_matrix(h)?)?;
    let hty = h.transpose() * y;
    Ok(q * Vector4::new(hty[0], hty[1], hty[2], hty[3]))
}

/// Gauss-Newton least squares on (position, c·bias).
pub fn solve_pvt(meas: &PseudorangeSet, initial: &InitialGuess, cfg: &SolverConfig) -> Result<PvtSolution, EstimationError> {
    let n = meas.len();
    if n < 4 {
        return Err(EstimationError::InsufficientSatellites { have: n, need: 4 });
    }
    let sats = meas.sat_positions();
    let mut pos = initial.position_m;
    let mut bias_m = initial.clock_bias_s * SPEED_OF_LIGHT;
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let h = design_matrix(&sats, &pos)?;
        let y = residuals(meas, &pos, bias_m);
        let dx = least_squares_step(&h, &y)?;
        pos += Vector3::new(dx[0], dx[1], dx[2]);
        bias_m += dx[3];
        last_update = Vector3::new(dx[0], dx[1], dx[2]).norm();
        if last_update < cfg.tol_m {
            break;
        }
    }
    if !(last_update < cfg.tol_m) {
        return Err(EstimationError::NonConvergence { iterations, last_update_m: last_update });
    }
    let dop = dop_at(&sats, &pos)?;
    let r = residuals(meas, &pos, bias_m);
    Ok(PvtSolution {
        position_m: pos,
        clock_bias_s: bias_m / SPEED_OF_LIGHT,
        velocity_mps: Vector3::zeros(),
        clock_drift_s_per_s: 0.0,
        dop,
        valid: dop.gdop <= cfg.gdop_threshold,
        nsat: n,
        iterations,
        residual_rms_m: (r.norm_squared() / n as f64).sqrt(),
    })
}

/// Velocity and clock drift from range-rates, reusing the position design matrix.
pub fn solve_velocity_drift(meas: &PseudorangeSet, pvt: &PvtSolution) -> Result<(Vector3<f64>, f64), EstimationError> {
    if meas.len() < 4 {
        return Err(EstimationError::InsufficientSatellites { have: meas.len(), need: 4 });
    }
    if !pvt.valid {
        return Err(EstimationError::InvalidSolution);
    }
    let sats = meas.sat_positions();
    let h = design_matrix(&sats, &pvt.position_m)?;
    let y = DVector::from_iterator(
        meas.len(),
        meas.measurements.iter().map(|m| {
            let e = (m.sat.position_m - pvt.position_m).normalize();
            m.range_rate_mps - e.dot(&m.sat.velocity_m_per_s)
        }),
    );
    let x = least_squares_step(&h, &y)?;
    Ok((Vector3::new(x[0], x[1], x[2]), x[3] / SPEED_OF_LIGHT))
}

/// One-sigma clock-bias uncertainty, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingUncertainty {
    /// `σ_P · GDOP / c`, the commonly quoted combined form.
    pub gdop_bound_s: f64,
    /// `σ_P · TDOP / c`, the time component alone.
    pub tdop_bound_s: f64,
}

pub fn timing_uncertainty(sigma_p_m: f64, dop: &DopValues) -> TimingUncertainty {
    TimingUncertainty { gdop_bound_s: sigma_p_m * dop.gdop / SPEED_OF_LIGHT, tdop_bound_s: sigma_p_m * dop.tdop / SPEED_OF_LIGHT }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticTimeSolution {
    pub clock_bias_s: f64,
    /// Standard error of the bias estimate, s.
    pub sigma_s: f64,
    pub nsat: usize,
}

/// Clock bias with the receiver position known: the mean of the per-satellite
/// estimates `(ρ − |s − r|)/c + δt_sat`.
///
/// The uncertainty is the sample spread over √n, or `sigma_p_m / c` when
/// only one satellite is tracked.
pub fn static_time_solve(
    meas: &PseudorangeSet,
    known_rx_pos: &Vector3<f64>,
    sigma_p_m: f64,
) -> Result<StaticTimeSolution, EstimationError> {
    let n = meas.len();
    if n == 0 {
        return Err(EstimationError::InsufficientSatellites { have: 0, need: 1 });
    }
    let est: Vec<f64> = meas
        .measurements
        .iter()
        .map(|m| (m.pseudorange_m - (m.sat.position_m - known_rx_pos).norm()) / SPEED_OF_LIGHT + m.sat_clock.offset_s)
        .collect();
    let mean = est.iter().sum::<f64>() / n as f64;
    let sigma_s = if n == 1 {
        sigma_p_m / SPEED_OF_LIGHT
    } else {
        let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Ok(StaticTimeSolution { clock_bias_s: mean, sigma_s, nsat: n })
}
