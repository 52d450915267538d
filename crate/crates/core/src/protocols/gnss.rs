//! Out-of-band synchronization: every node disciplines its own clock with
//! its receiver's PPS. No messages are exchanged.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{id_order, sample_pairs, NodeReport, ProtocolError, ProtocolKind, SamplingConfig, SyncResult, VehicleNode};
use crate::analysis::OffsetSeries;
use crate::clocks::{discipline_clock_with, DisciplineConfig, DisciplinedClock, DEFAULT_ADJUST_LIMIT_S};
use crate::rng::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnssSyncConfig {
    pub pps_rate_hz: f64,
    pub adjust_limit_s: f64,
    /// Error of the Doppler-derived clock skew estimate (dimensionless).
    pub skew_estimate_sigma: f64,
    pub seed: u64,
}

impl Default for GnssSyncConfig {
    fn default() -> Self {
        Self { pps_rate_hz: 1.0, adjust_limit_s: DEFAULT_ADJUST_LIMIT_S, skew_estimate_sigma: 1e-10, seed: 0 }
    }
}

impl GnssSyncConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.pps_rate_hz > 0.0) || !(self.skew_estimate_sigma >= 0.0) || !(self.adjust_limit_s > 0.0) {
            return Err(ProtocolError::InvalidConfig("pps_rate_hz and adjust_limit_s must be > 0 and skew_estimate_sigma >= 0".into()));
        }
        Ok(())
    }
}

struct GnssNode {
    clock: DisciplinedClock,
    first_edge: f64,
}

pub fn run_gnss_sync(nodes: &[VehicleNode], cfg: &GnssSyncConfig, sampling: &SamplingConfig) -> Result<SyncResult, ProtocolError> {
    sampling.validate()?;
    cfg.validate()?;
    let order = id_order(nodes)?;
    if let Some(n) = nodes.iter().find(|n| n.pps.is_none()) {
        return Err(ProtocolError::MissingPps { node_id: n.node_id });
    }
    let n_pulses = (sampling.duration_s * cfg.pps_rate_hz).floor() as usize + 1;
    let mut state: Vec<Option<GnssNode>> = Vec::with_capacity(nodes.len());
    for node in nodes {
        let model = node.pps.as_ref().expect("checked above");
        let offsets = model.offsets(n_pulses, cfg.pps_rate_hz)?;
        let samples: Vec<(f64, f64)> = offsets
            .iter()
            .enumerate()
            .map(|(k, &o)| (k as f64 / cfg.pps_rate_hz, o))
            .filter(|&(t, _)| node.gnss_at(t) && node.active_at(t))
            .collect();
        if samples.is_empty() {
            state.push(None);
            continue;
        }
        let first_edge = samples[0].0 + samples[0].1 * 1e-9;
        let series =
            OffsetSeries::new(samples, format!("node {}", node.node_id)).map_err(|e| ProtocolError::InvalidConfig(e.to_string()))?;
        let z: f64 = derived_rng(cfg.seed, &format!("doppler-skew-{}", node.node_id)).sample(StandardNormal);
        let discipline =
            DisciplineConfig { adjust_limit_s: cfg.adjust_limit_s, skew_estimate: Some(node.clock.skew() + z * cfg.skew_estimate_sigma) };
        let clock = discipline_clock_with(&node.clock, &series, &discipline)?;
        state.push(Some(GnssNode { clock, first_edge }));
    }
    let logical = |i: usize, t: f64| state[i].as_ref().filter(|s| t >= s.first_edge).map(|s| s.clock.corrected_time(t));
    let mut traces = Vec::new();
    for t in sampling.times() {
        sample_pairs(nodes, &order, t, sampling.pairs, logical, &mut traces);
    }
    let reports = order
        .iter()
        .map(|&i| {
            let mut r = NodeReport::plain(nodes[i].node_id, state[i].is_some());
            r.skew_estimate = state[i].as_ref().map(|_| nodes[i].clock.skew());
            r
        })
        .collect();
    Ok(SyncResult::assemble(ProtocolKind::Gnss, traces, sampling, 0, n_pulses as u64, reports))
}
