//! Vehicular network simulation: GNSS (out-of-band) synchronization and the
//! in-band TPSN, RBS, FTSP and CTS protocols on a shared jittery channel.
//!
//! In-band protocols run on a single-threaded discrete-event engine ordered
//! by `(time, node_id, sequence)`. Every run samples the pairwise clock
//! differences of synchronized nodes on a fixed grid, so results of
//! different protocols are directly comparable.

mod cts;
mod engine;
mod ftsp;
mod gnss;
mod rbs;
mod tpsn;

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clocks::{ClockError, PpsErrorModel, PpsPreset, QuartzClock};
use crate::geo::{ecef_to_enu_rotation, Geodetic};
use crate::rng::derived_rng;
use crate::trajectory::{Trajectory, TrajectoryPoint};
use crate::visibility::AvailabilityRecord;

pub use cts::{run_cts, CtsConfig};
pub use ftsp::{run_ftsp, FtspConfig};
pub use gnss::{run_gnss_sync, GnssSyncConfig};
pub use rbs::{run_rbs, RbsConfig};
pub use tpsn::{run_tpsn, TpsnConfig};

pub const DEFAULT_COMM_RANGE_M: f64 = 1_000.0;
pub const TRACE_CSV_HEADER: &str = "protocol,node_a,node_b,t_s,error_s";

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("node {node_id} has no PPS model")]
    MissingPps { node_id: u32 },
    #[error("need at least 2 beacon receivers in range, found {have}")]
    InsufficientReceivers { have: usize },
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Clock(#[from] ClockError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Gnss,
    Tpsn,
    Rbs,
    Ftsp,
    Cts,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [ProtocolKind::Gnss, ProtocolKind::Tpsn, ProtocolKind::Rbs, ProtocolKind::Ftsp, ProtocolKind::Cts];

    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::Gnss => "GNSS",
            ProtocolKind::Tpsn => "TPSN",
            ProtocolKind::Rbs => "RBS",
            ProtocolKind::Ftsp => "FTSP",
            ProtocolKind::Cts => "CTS",
        }
    }

    pub fn is_in_band(self) -> bool {
        self != ProtocolKind::Gnss
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown protocol `{s}` (known: gnss, tpsn, rbs, ftsp, cts)"))
    }
}

/// Step function of GNSS timing availability over time. Before the first
/// change the first value holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityTrace {
    changes: Vec<(f64, bool)>,
}

impl AvailabilityTrace {
    pub fn always() -> Self {
        Self { changes: vec![(0.0, true)] }
    }

    pub fn new(mut changes: Vec<(f64, bool)>) -> Self {
        changes.sort_by(|a, b| a.0.total_cmp(&b.0));
        if changes.is_empty() {
            changes.push((0.0, true));
        }
        Self { changes }
    }

    /// Available whenever an epoch has at least `min_sats` satellites.
    pub fn from_records(records: &[AvailabilityRecord], min_sats: usize) -> Self {
        let mut changes: Vec<(f64, bool)> = Vec::new();
        for r in records {
            let ok = r.nsat >= min_sats;
            if changes.last().is_none_or(|c| c.1 != ok) {
                changes.push((r.t, ok));
            }
        }
        Self::new(changes)
    }

    pub fn available_at(&self, t: f64) -> bool {
        let idx = self.changes.partition_point(|c| c.0 <= t);
        self.changes[idx.saturating_sub(1)].1
    }
}

/// Fixed per-radio processing asymmetry added to the channel delays.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RadioProfile {
    pub extra_tx_s: f64,
    pub extra_rx_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleNode {
    pub node_id: u32,
    pub trajectory: Trajectory,
    pub clock: QuartzClock,
    pub pps: Option<PpsErrorModel>,
    /// `None` means GNSS is always available.
    pub gnss_available: Option<AvailabilityTrace>,
    pub radio: RadioProfile,
    pub active_from_s: f64,
    pub active_until_s: Option<f64>,
}

impl VehicleNode {
    pub fn new(node_id: u32, trajectory: Trajectory, clock: QuartzClock) -> Self {
        Self {
            node_id,
            trajectory,
            clock,
            pps: None,
            gnss_available: None,
            radio: RadioProfile::default(),
            active_from_s: f64::NEG_INFINITY,
            active_until_s: None,
        }
    }

    pub fn position_at(&self, t: f64) -> Vector3<f64> {
        self.trajectory.position_at(t)
    }

    pub fn active_at(&self, t: f64) -> bool {
        t >= self.active_from_s && self.active_until_s.is_none_or(|u| t < u)
    }

    pub fn gnss_at(&self, t: f64) -> bool {
        self.gnss_available.as_ref().is_none_or(|a| a.available_at(t))
    }
}

/// Gaussian processing delay, truncated at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub mean_us: f64,
    pub jitter_us: f64,
}

impl DelayModel {
    pub fn fixed(mean_us: f64) -> Self {
        Self { mean_us, jitter_us: 0.0 }
    }

    /// Delay in seconds from one standard-normal draw.
    pub fn from_normal(&self, z: f64) -> f64 {
        ((self.mean_us + self.jitter_us * z) * 1e-6).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub comm_range_m: f64,
    pub tx_delay: DelayModel,
    pub rx_delay: DelayModel,
    /// Jitter of link-layer send/receive timestamps, used by FTSP.
    pub mac_stamp_jitter_us: f64,
    pub seed: u64,
}

impl Default for ChannelModel {
    /// Calibrated urban defaults: see the `sync-compare` preset.
    fn default() -> Self {
        Self {
            comm_range_m: DEFAULT_COMM_RANGE_M,
            tx_delay: DelayModel { mean_us: 200.0, jitter_us: 10.0 },
            rx_delay: DelayModel { mean_us: 100.0, jitter_us: 10.0 },
            mac_stamp_jitter_us: 1.7,
            seed: 0,
        }
    }
}

impl ChannelModel {
    pub fn ideal(seed: u64) -> Self {
        Self {
            comm_range_m: DEFAULT_COMM_RANGE_M,
            tx_delay: DelayModel::fixed(0.0),
            rx_delay: DelayModel::fixed(0.0),
            mac_stamp_jitter_us: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |what: &str| Err(ProtocolError::InvalidChannel(format!("{what} must be >= 0 and finite")));
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !(self.comm_range_m > 0.0) || !self.comm_range_m.is_finite() {
            return Err(ProtocolError::InvalidChannel("comm_range_m must be > 0".into()));
        }
        for (v, what) in [
            (self.tx_delay.mean_us, "tx_delay.mean_us"),
            (self.tx_delay.jitter_us, "tx_delay.jitter_us"),
            (self.rx_delay.mean_us, "rx_delay.mean_us"),
            (self.rx_delay.jitter_us, "rx_delay.jitter_us"),
            (self.mac_stamp_jitter_us, "mac_stamp_jitter_us"),
        ] {
            if !ok(v) {
                return bad(what);
            }
        }
        Ok(())
    }

    /// Mean one-way processing delay, s (what a receiver can compensate).
    pub fn mean_delay_s(&self) -> f64 {
        (self.tx_delay.mean_us + self.rx_delay.mean_us) * 1e-6
    }
}

/// Which node pairs are recorded at each sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSelection {
    #[default]
    All,
    /// Ids sorted and paired (1st, 2nd), (3rd, 4th), ...
    Disjoint,
    /// Every node against the given node.
    Reference(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub duration_s: f64,
    pub interval_s: f64,
    /// Grid is `phase_s + k * interval_s`.
    pub phase_s: f64,
    /// Samples before this time are traced but excluded from the summary.
    pub warmup_s: f64,
    pub pairs: PairSelection,
}

impl SamplingConfig {
    pub fn new(duration_s: f64, interval_s: f64, warmup_s: f64) -> Self {
        Self { duration_s, interval_s, phase_s: interval_s / 2.0, warmup_s, pairs: PairSelection::All }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.duration_s > 0.0) || !(self.interval_s > 0.0) || !(self.phase_s >= 0.0) {
            return Err(ProtocolError::InvalidConfig("sampling needs duration > 0, interval > 0, phase >= 0".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = ((self.duration_s - self.phase_s) / self.interval_s + 1e-9).floor();
        if n < 0.0 {
            return Vec::new();
        }
        (0..=n as usize).map(|k| self.phase_s + k as f64 * self.interval_s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub node_a: u32,
    pub node_b: u32,
    pub t_s: f64,
    /// Logical time of `node_a` minus that of `node_b`, s.
    pub error_s: f64,
}

/// Statistics of |pairwise error| over the steady-state samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub samples: usize,
    pub mean_abs_s: f64,
    pub std_abs_s: f64,
    pub rms_s: f64,
    pub peak_abs_s: f64,
}

pub fn summarize(traces: &[PairError], warmup_s: f64) -> ErrorSummary {
    let (mut n, mut sum, mut sum_sq, mut peak) = (0usize, 0.0f64, 0.0f64, 0.0f64);
    for e in traces.iter().filter(|e| e.t_s >= warmup_s) {
        let a = e.error_s.abs();
        n += 1;
        sum += a;
        sum_sq += a * a;
        peak = peak.max(a);
    }
    if n == 0 {
        return ErrorSummary::default();
    }
    let nf = n as f64;
    let mean = sum / nf;
    ErrorSummary {
        samples: n,
        mean_abs_s: mean,
        std_abs_s: (sum_sq / nf - mean * mean).max(0.0).sqrt(),
        rms_s: (sum_sq / nf).sqrt(),
        peak_abs_s: peak,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub node_id: u32,
    pub synced: bool,
    /// Tree depth (TPSN) or hop count (CTS).
    pub level: Option<u32>,
    /// Group (CTS) or root (FTSP) the node ended in.
    pub group_id: Option<u32>,
    /// Clock skew relative to the reference, as estimated by the protocol.
    pub skew_estimate: Option<f64>,
}

impl NodeReport {
    fn plain(node_id: u32, synced: bool) -> Self {
        Self { node_id, synced, level: None, group_id: None, skew_estimate: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncResult {
    pub protocol: ProtocolKind,
    pub traces: Vec<PairError>,
    pub warmup_s: f64,
    pub summary: ErrorSummary,
    pub message_count: u64,
    pub rounds: u64,
    pub messages_per_node_per_round: f64,
    /// Nodes never synchronized during the run.
    pub unsynced: Vec<u32>,
    pub nodes: Vec<NodeReport>,
}

impl SyncResult {
    fn assemble(
        protocol: ProtocolKind,
        traces: Vec<PairError>,
        sampling: &SamplingConfig,
        message_count: u64,
        rounds: u64,
        nodes: Vec<NodeReport>,
    ) -> Self {
        let summary = summarize(&traces, sampling.warmup_s);
        let denom = (nodes.len() as u64 * rounds.max(1)) as f64;
        Self {
            protocol,
            summary,
            warmup_s: sampling.warmup_s,
            message_count,
            rounds,
            messages_per_node_per_round: if denom > 0.0 { message_count as f64 / denom } else { 0.0 },
            unsynced: nodes.iter().filter(|n| !n.synced).map(|n| n.node_id).collect(),
            nodes,
            traces,
        }
    }

    pub fn write_traces_csv<W: Write>(&self, mut w: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "{TRACE_CSV_HEADER}")?;
        }
        for e in &self.traces {
            writeln!(w, "{},{},{},{},{:e}", self.protocol.label(), e.node_a, e.node_b, e.t_s, e.error_s)?;
        }
        Ok(())
    }

    /// Steady-state errors of one pair, `node_a − node_b`.
    pub fn pair_errors(&self, node_a: u32, node_b: u32) -> Vec<f64> {
        self.traces
            .iter()
            .filter(|e| e.t_s >= self.warmup_s)
            .filter_map(|e| match (e.node_a, e.node_b) {
                (a, b) if a == node_a && b == node_b => Some(e.error_s),
                (a, b) if a == node_b && b == node_a => Some(-e.error_s),
                _ => None,
            })
            .collect()
    }
}

/// Records pairwise logical-time differences at one sample instant.
pub(crate) fn sample_pairs(
    nodes: &[VehicleNode],
    order: &[usize],
    t: f64,
    pairs: PairSelection,
    logical: impl Fn(usize, f64) -> Option<f64>,
    out: &mut Vec<PairError>,
) {
    let value = |i: usize| if nodes[i].active_at(t) { logical(i, t) } else { None };
    match pairs {
        PairSelection::All => {
            let vals: Vec<(u32, f64)> = order.iter().filter_map(|&i| value(i).map(|v| (nodes[i].node_id, v))).collect();
            for (k, (a, va)) in vals.iter().enumerate() {
                for (b, vb) in &vals[k + 1..] {
                    out.push(PairError { node_a: *a, node_b: *b, t_s: t, error_s: va - vb });
                }
            }
        }
        PairSelection::Disjoint => {
            for pair in order.chunks_exact(2) {
                if let (Some(va), Some(vb)) = (value(pair[0]), value(pair[1])) {
                    out.push(PairError { node_a: nodes[pair[0]].node_id, node_b: nodes[pair[1]].node_id, t_s: t, error_s: va - vb });
                }
            }
        }
        PairSelection::Reference(id) => {
            let Some(&r) = order.iter().find(|&&i| nodes[i].node_id == id) else { return };
            let Some(vr) = value(r) else { return };
            for &i in order.iter().filter(|&&i| i != r) {
                if let Some(v) = value(i) {
                    out.push(PairError { node_a: nodes[r].node_id, node_b: nodes[i].node_id, t_s: t, error_s: vr - v });
                }
            }
        }
    }
}

/// Node indices sorted by id; rejects empty networks and duplicate ids.
pub(crate) fn id_order(nodes: &[VehicleNode]) -> Result<Vec<usize>, ProtocolError> {
    if nodes.is_empty() {
        return Err(ProtocolError::EmptyNetwork);
    }
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by_key(|&i| nodes[i].node_id);
    if let Some(w) = order.windows(2).find(|w| nodes[w[0]].node_id == nodes[w[1]].node_id) {
        return Err(ProtocolError::DuplicateNode(nodes[w[0]].node_id));
    }
    Ok(order)
}

pub(crate) fn index_of(nodes: &[VehicleNode], id: u32) -> Result<usize, ProtocolError> {
    nodes.iter().position(|n| n.node_id == id).ok_or(ProtocolError::UnknownNode(id))
}

/// Parameters for a platoon of vehicles driving in file along a straight road.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetConfig {
    pub count: usize,
    pub origin: Geodetic,
    pub heading_deg: f64,
    pub speed_kmh: f64,
    pub spacing_m: f64,
    pub duration_s: f64,
    /// Standard deviation of the quartz frequency error.
    pub skew_ppm_sigma: f64,
    /// Initial clock offsets are uniform in ± this.
    pub offset_ms_max: f64,
    pub pps_preset: Option<PpsPreset>,
    pub seed: u64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            count: 10,
            origin: Geodetic::from_degrees(-27.4705, 153.026, 20.0),
            heading_deg: 45.0,
            speed_kmh: 50.0,
            spacing_m: 25.0,
            duration_s: 600.0,
            skew_ppm_sigma: 5.0,
            offset_ms_max: 1.0,
            pps_preset: Some(PpsPreset::SameModel),
            seed: 1,
        }
    }
}

pub fn build_platoon(cfg: &FleetConfig) -> Result<Vec<VehicleNode>, ProtocolError> {
    if cfg.count == 0 {
        return Err(ProtocolError::EmptyNetwork);
    }
    let origin = cfg.origin.to_ecef();
    let to_ecef = ecef_to_enu_rotation(&origin).transpose();
    let h = cfg.heading_deg.to_radians();
    let dir = to_ecef * Vector3::new(h.sin(), h.cos(), 0.0);
    let v = cfg.speed_kmh / 3.6;
    let mut skew_rng = derived_rng(cfg.seed, "fleet-skew");
    let mut offset_rng = derived_rng(cfg.seed, "fleet-offset");
    (0..cfg.count)
        .map(|i| {
            let start = origin - dir * (cfg.spacing_m * i as f64);
            let end = start + dir * (v * cfg.duration_s);
            let pt = |t_s: f64, p: Vector3<f64>| TrajectoryPoint { t_s, x_m: p.x, y_m: p.y, z_m: p.z };
            let trajectory = Trajectory::new(vec![pt(0.0, start), pt(cfg.duration_s.max(1e-9), end)])
                .map_err(|e| ProtocolError::InvalidConfig(e.to_string()))?;
            let z: f64 = skew_rng.sample(StandardNormal);
            let skew = (z * cfg.skew_ppm_sigma * 1e-6).clamp(-5e-5, 5e-5);
            let offset = offset_rng.random_range(-1.0..=1.0) * cfg.offset_ms_max * 1e-3;
            let clock = QuartzClock::new(i as u32, 1.0 + skew, offset)?;
            let mut node = VehicleNode::new(i as u32, trajectory, clock);
            node.pps = cfg.pps_preset.map(|p| p.model_for(i, cfg.seed));
            Ok(node)
        })
        .collect()
}

/// Which protocols to run and their settings, on one node realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    pub protocols: Vec<ProtocolKind>,
    pub sampling: SamplingConfig,
    pub gnss: GnssSyncConfig,
    pub tpsn: TpsnConfig,
    pub rbs: RbsConfig,
    pub ftsp: FtspConfig,
    pub cts: CtsConfig,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            protocols: ProtocolKind::ALL.to_vec(),
            sampling: SamplingConfig::new(600.0, 1.0, 30.0),
            gnss: GnssSyncConfig::default(),
            tpsn: TpsnConfig::default(),
            rbs: RbsConfig::default(),
            ftsp: FtspConfig::default(),
            cts: CtsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub node_count: usize,
    pub results: Vec<SyncResult>,
}

impl ComparisonReport {
    pub fn result(&self, kind: ProtocolKind) -> Option<&SyncResult> {
        self.results.iter().find(|r| r.protocol == kind)
    }

    /// Best in-band RMS divided by the GNSS RMS.
    pub fn separation_ratio(&self) -> Option<f64> {
        let gnss = self.result(ProtocolKind::Gnss)?.summary.rms_s;
        let best = self
            .results
            .iter()
            .filter(|r| r.protocol.is_in_band() && r.summary.samples > 0)
            .map(|r| r.summary.rms_s)
            .min_by(f64::total_cmp)?;
        (gnss > 0.0).then(|| best / gnss)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8}{:>14}{:>14}{:>14}{:>14}{:>10}{:>12}{:>10}",
            "Protocol", "Mean |e|", "STD", "RMS", "Peak", "Msgs", "Msg/node/rd", "Unsynced"
        );
        for r in &self.results {
            let m = &r.summary;
            let _ = writeln!(
                s,
                "{:<8}{:>14}{:>14}{:>14}{:>14}{:>10}{:>12.2}{:>10}",
                r.protocol.label(),
                format_seconds(m.mean_abs_s),
                format_seconds(m.std_abs_s),
                format_seconds(m.rms_s),
                format_seconds(m.peak_abs_s),
                r.message_count,
                r.messages_per_node_per_round,
                r.unsynced.len()
            );
        }
        if let Some(ratio) = self.separation_ratio() {
            let _ = writeln!(s, "best in-band RMS / GNSS RMS = {ratio:.1}");
        }
        s
    }
}

/// `12.3 ns`, `4.56 us`, `1.20 ms` style.
pub fn format_seconds(v: f64) -> String {
    let a = v.abs();
    if a < 1e-6 {
        format!("{:.2} ns", v * 1e9)
    } else if a < 1e-3 {
        format!("{:.2} us", v * 1e6)
    } else {
        format!("{:.3} ms", v * 1e3)
    }
}

pub fn compare_protocols(nodes: &[VehicleNode], channel: &ChannelModel, cfg: &ComparisonConfig) -> Result<ComparisonReport, ProtocolError> {
    let mut results = Vec::with_capacity(cfg.protocols.len());
    for kind in &cfg.protocols {
        let r = match kind {
            ProtocolKind::Gnss => run_gnss_sync(nodes, &cfg.gnss, &cfg.sampling)?,
            ProtocolKind::Tpsn => run_tpsn(nodes, channel, &cfg.tpsn, &cfg.sampling)?,
            ProtocolKind::Rbs => run_rbs(nodes, channel, &cfg.rbs, &cfg.sampling)?,
            ProtocolKind::Ftsp => run_ftsp(nodes, channel, &cfg.ftsp, &cfg.sampling)?,
            ProtocolKind::Cts => run_cts(nodes, channel, &cfg.cts, &cfg.sampling)?,
        };
        results.push(r);
    }
    Ok(ComparisonReport { node_count: nodes.len(), results })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Static nodes on a line along local east, `spacing_m` apart.
    pub fn line(n: usize, spacing_m: f64, duration_s: f64, clocks: impl Fn(u32) -> QuartzClock) -> Vec<VehicleNode> {
        let origin = Geodetic::from_degrees(-27.47, 153.03, 10.0).to_ecef();
        let east = ecef_to_enu_rotation(&origin).transpose() * Vector3::x();
        (0..n)
            .map(|i| {
                let p = origin + east * (spacing_m * i as f64);
                VehicleNode::new(i as u32, Trajectory::stationary(p, 0.0, duration_s), clocks(i as u32))
            })
            .collect()
    }

    pub fn skewed(id: u32) -> QuartzClock {
        let skew = [3e-6, -4e-6, 1.5e-6, 6e-6, -2e-6, 0.5e-6][id as usize % 6];
        QuartzClock::new(id, 1.0 + skew, 1e-4 * (id as f64 + 1.0) * if id.is_multiple_of(2) { 1.0 } else { -1.0 }).unwrap()
    }
}
