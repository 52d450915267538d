//! Scenario files: one TOML document names the constellations, receiver
//! motion, sky mask, clocks, channel and protocols of a run.
//!
//! Every random stream is seeded by [`derive_seed`] from the scenario seed
//! and a fixed component name (`pvt-GPS`, `pps`, `fleet`, `channel`,
//! `gnss`), so selecting or reordering outputs never changes another
//! output's content. Relative paths resolve against the scenario file's
//! directory.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{moving_window_mean, offset_statistics, stats_of, stats_table, OffsetSeries, OffsetStats};
use crate::clocks::{pairwise_pps_series, PpsPreset};
use crate::constellation::{build_nominal_constellation, propagate, ConstellationSet, SatelliteClock};
use crate::estimation::DEFAULT_GDOP_THRESHOLD;
use crate::estimation::{
    simulate_pseudoranges_with, solve_pvt, timing_uncertainty, InitialGuess, ReceiverTruth, SatelliteObservable, SolverConfig,
};
use crate::geo::Geodetic;
use crate::protocols::{
    build_platoon, compare_protocols, AvailabilityTrace, ChannelModel, ComparisonConfig, ComparisonReport, CtsConfig, DelayModel,
    ErrorSummary, FleetConfig, FtspConfig, GnssSyncConfig, NodeReport, PairSelection, ProtocolKind, RbsConfig, SamplingConfig, TpsnConfig,
};
use crate::rng::{derive_seed, derived_rng};
use crate::trajectory::{Route, RouteSegment, Trajectory};
use crate::visibility::{
    availability_summary, availability_table, gdop_table, AvailabilityReport, AvailabilityRun, MaskProfile, VisibilityMask,
    DEFAULT_CUTOFF_DEG, DEFAULT_EPOCH_STEP_S, EPOCH_CSV_HEADER,
};

pub const PRESET_NAMES: [&str; 4] = ["open-sky", "urban-canyon", "pps-bench", "sync-compare"];

/// Source text of a shipped preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    match name {
        "open-sky" => Some(include_str!("../../../presets/open-sky.scn")),
        "urban-canyon" => Some(include_str!("../../../presets/urban-canyon.scn")),
        "pps-bench" => Some(include_str!("../../../presets/pps-bench.scn")),
        "sync-compare" => Some(include_str!("../../../presets/sync-compare.scn")),
        _ => None,
    }
}

/// One validation failure, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn join_issues(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("\n  {i}")).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario:{}", join_issues(.0))]
    Invalid(Vec<Issue>),
    #[error("scenario `{scenario}`, {stage}: {message}")]
    Run { scenario: String, stage: &'static str, message: String },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
}

/// Pipelines a scenario can request; they always run in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    Availability,
    Pvt,
    Pps,
    Sync,
}

impl Output {
    pub const ALL: [Output; 4] = [Output::Availability, Output::Pvt, Output::Pps, Output::Sync];

    pub fn name(self) -> &'static str {
        match self {
            Output::Availability => "availability",
            Output::Pvt => "pvt",
            Output::Pps => "pps",
            Output::Sync => "sync",
        }
    }
}

impl std::str::FromStr for Output {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown output `{s}` (known: availability, pvt, pps, sync)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteSpec {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub height_m: f64,
}

impl Default for SiteSpec {
    /// Brisbane CBD.
    fn default() -> Self {
        Self { lat_deg: -27.4705, lon_deg: 153.026, height_m: 20.0 }
    }
}

impl SiteSpec {
    pub fn geodetic(&self) -> Geodetic {
        Geodetic::from_degrees(self.lat_deg, self.lon_deg, self.height_m)
    }
}

/// Drive starting at the site, looped until the duration is covered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub segments: Vec<RouteSegment>,
}

/// `kind = "open-sky"` uses a flat `cutoff_deg`; `kind = "canyon"` places
/// street walls along the route with one aspect ratio per segment (cycled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskSpec {
    pub kind: String,
    pub cutoff_deg: f64,
    pub sectors: usize,
    pub aspects: Vec<f64>,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self { kind: "open-sky".into(), cutoff_deg: DEFAULT_CUTOFF_DEG, sectors: 36, aspects: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvtSpec {
    pub step_s: f64,
    pub sigma_pseudorange_m: f64,
    pub sigma_doppler_mps: f64,
    /// True receiver clock bias used to synthesize pseudoranges.
    pub clock_bias_s: f64,
}

impl Default for PvtSpec {
    fn default() -> Self {
        Self { step_s: 60.0, sigma_pseudorange_m: 5.0, sigma_doppler_mps: 0.05, clock_bias_s: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpsSpec {
    pub presets: Vec<String>,
    /// Defaults to the scenario duration.
    pub duration_s: Option<f64>,
    pub rate_hz: f64,
    pub window_s: f64,
}

impl Default for PpsSpec {
    fn default() -> Self {
        Self { presets: PpsPreset::ALL.iter().map(|p| p.name().to_string()).collect(), duration_s: None, rate_hz: 1.0, window_s: 7200.0 }
    }
}

/// A platoon driving in line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodesSpec {
    pub count: usize,
    pub spacing_m: f64,
    pub speed_kmh: f64,
    pub heading_deg: f64,
    pub skew_ppm_sigma: f64,
    pub offset_ms_max: f64,
    pub pps_preset: String,
}

impl Default for NodesSpec {
    fn default() -> Self {
        let f = FleetConfig::default();
        Self {
            count: f.count,
            spacing_m: f.spacing_m,
            speed_kmh: f.speed_kmh,
            heading_deg: f.heading_deg,
            skew_ppm_sigma: f.skew_ppm_sigma,
            offset_ms_max: f.offset_ms_max,
            pps_preset: PpsPreset::SameModel.name().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    pub comm_range_m: f64,
    pub tx_delay: DelayModel,
    pub rx_delay: DelayModel,
    pub mac_stamp_jitter_us: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        let c = ChannelModel::default();
        Self { comm_range_m: c.comm_range_m, tx_delay: c.tx_delay, rx_delay: c.rx_delay, mac_stamp_jitter_us: c.mac_stamp_jitter_us }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnssSpec {
    pub pps_rate_hz: f64,
    pub adjust_limit_s: f64,
    pub skew_estimate_sigma: f64,
    /// Gate PPS on the visible satellite count along the lead vehicle's
    /// path; absent means always available.
    pub min_sats: Option<usize>,
    pub constellation: String,
}

impl Default for GnssSpec {
    fn default() -> Self {
        let g = GnssSyncConfig::default();
        Self {
            pps_rate_hz: g.pps_rate_hz,
            adjust_limit_s: g.adjust_limit_s,
            skew_estimate_sigma: g.skew_estimate_sigma,
            min_sats: None,
            constellation: ConstellationSet::GpsPlusBds.label().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncSpec {
    pub protocols: Vec<String>,
    pub sample_interval_s: f64,
    pub warmup_s: f64,
    /// `all`, `disjoint` or `reference:<id>`.
    pub pairs: String,
    pub gnss: GnssSpec,
    pub tpsn: TpsnConfig,
    pub rbs: RbsConfig,
    pub ftsp: FtspConfig,
    pub cts: CtsConfig,
}

impl Default for SyncSpec {
    fn default() -> Self {
        Self {
            protocols: ProtocolKind::ALL.iter().map(|p| p.label().to_ascii_lowercase()).collect(),
            sample_interval_s: 1.0,
            warmup_s: 30.0,
            pairs: "all".into(),
            gnss: GnssSpec::default(),
            tpsn: TpsnConfig::default(),
            rbs: RbsConfig::default(),
            ftsp: FtspConfig::default(),
            cts: CtsConfig::default(),
        }
    }
}

fn default_epoch_step() -> f64 {
    DEFAULT_EPOCH_STEP_S
}

fn default_gdop_threshold() -> f64 {
    DEFAULT_GDOP_THRESHOLD
}

fn default_constellations() -> Vec<String> {
    ConstellationSet::ALL.iter().map(|c| c.label().to_string()).collect()
}

/// A scenario as written in the file. [`Scenario::validate`] turns it into a
/// runnable [`Plan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub seed: Option<u64>,
    pub duration_s: Option<f64>,
    #[serde(default = "default_epoch_step")]
    pub epoch_step_s: f64,
    #[serde(default = "default_gdop_threshold")]
    pub gdop_threshold: f64,
    #[serde(default = "default_constellations")]
    pub constellations: Vec<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub site: SiteSpec,
    pub route: Option<RouteSpec>,
    /// `t_s,x_m,y_m,z_m` CSV in ECEF; used as is instead of a route.
    pub trajectory_file: Option<PathBuf>,
    #[serde(default)]
    pub mask: MaskSpec,
    #[serde(default)]
    pub pvt: PvtSpec,
    #[serde(default)]
    pub pps: PpsSpec,
    #[serde(default)]
    pub nodes: NodesSpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub sync: SyncSpec,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_toml_str(src: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ScenarioError> {
        let mut s: Scenario = toml::from_str(src).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.base_dir = base_dir.into();
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let src = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut s = Self::from_toml_str(&src, base)?;
        if s.name.is_empty() {
            s.name = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(s)
    }

    pub fn preset(name: &str) -> Option<Self> {
        let src = preset_source(name)?;
        Some(Self::from_toml_str(src, ".").expect("shipped presets parse"))
    }

    /// A file path if it exists, else a preset name.
    pub fn load_or_preset(arg: &str) -> Result<Self, ScenarioError> {
        let path = Path::new(arg);
        if !path.exists() {
            if let Some(s) = Self::preset(arg) {
                return Ok(s);
            }
        }
        Self::load(path)
    }

    /// All violations at once; nothing is applied unless every check passes.
    pub fn validate(&self) -> Result<Plan, ScenarioError> {
        let mut issues = Vec::new();
        let plan = self.check(&mut issues);
        match plan {
            Some(p) if issues.is_empty() => Ok(p),
            _ => Err(ScenarioError::Invalid(issues)),
        }
    }

    fn check(&self, issues: &mut Vec<Issue>) -> Option<Plan> {
        let mut bad = |path: &str, msg: String| issues.push(Issue::new(path, msg));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let non_negative = |v: f64| v >= 0.0 && v.is_finite();

        if self.seed.is_none() {
            bad("seed", "required; every run must be seeded".into());
        }
        match self.duration_s {
            None => bad("duration_s", "required".into()),
            Some(d) if !positive(d) => bad("duration_s", format!("must be > 0, got {d}")),
            _ => {}
        }
        if !positive(self.epoch_step_s) {
            bad("epoch_step_s", format!("must be > 0, got {}", self.epoch_step_s));
        }
        if !positive(self.gdop_threshold) {
            bad("gdop_threshold", format!("must be > 0, got {}", self.gdop_threshold));
        }

        let mut constellations = Vec::new();
        if self.constellations.is_empty() {
            bad("constellations", "at least one of GPS, BDS, GPS+BDS".into());
        }
        for (i, c) in self.constellations.iter().enumerate() {
            match c.parse::<ConstellationSet>() {
                Ok(c) if constellations.contains(&c) => bad(&format!("constellations[{i}]"), format!("duplicate `{c}`")),
                Ok(c) => constellations.push(c),
                Err(e) => bad(&format!("constellations[{i}]"), e),
            }
        }

        let mut outputs = Vec::new();
        if self.outputs.is_empty() {
            bad("outputs", "at least one of availability, pvt, pps, sync".into());
        }
        for (i, o) in self.outputs.iter().enumerate() {
            match o.parse::<Output>() {
                Ok(o) => outputs.push(o),
                Err(e) => bad(&format!("outputs[{i}]"), e),
            }
        }
        outputs.sort();
        outputs.dedup();

        let site = &self.site;
        if !(site.lat_deg.abs() <= 90.0) {
            bad("site.lat_deg", format!("must be within ±90, got {}", site.lat_deg));
        }
        if !site.lon_deg.is_finite() || !site.height_m.is_finite() {
            bad("site", "longitude and height must be finite".into());
        }

        let duration = self.duration_s.filter(|d| positive(*d)).unwrap_or(1.0);
        let route = self.route.as_ref().map(|r| Route { origin: site.geodetic(), segments: r.segments.clone() });
        if let Some(r) = &route {
            if r.segments.is_empty() {
                bad("route.segments", "at least one segment".into());
            }
            for (i, s) in r.segments.iter().enumerate() {
                if !positive(s.duration_s) {
                    bad(&format!("route.segments[{i}].duration_s"), format!("must be > 0, got {}", s.duration_s));
                }
                if !non_negative(s.speed_kmh) {
                    bad(&format!("route.segments[{i}].speed_kmh"), format!("must be >= 0, got {}", s.speed_kmh));
                }
                if !s.heading_deg.is_finite() {
                    bad(&format!("route.segments[{i}].heading_deg"), "must be finite".into());
                }
            }
        }
        let trajectory = match (&route, &self.trajectory_file) {
            (Some(_), Some(_)) => {
                bad("trajectory_file", "conflicts with [route]; give one".into());
                None
            }
            (Some(r), None) => r.trajectory(duration, 10.0).ok(),
            (None, Some(file)) => {
                let path = self.base_dir.join(file);
                match fs::File::open(&path) {
                    Err(e) => {
                        bad("trajectory_file", format!("cannot read {}: {e}", path.display()));
                        None
                    }
                    Ok(f) => match Trajectory::read_csv(io::BufReader::new(f)) {
                        Ok(t) => Some(t),
                        Err(e) => {
                            bad("trajectory_file", format!("{}: {e}", path.display()));
                            None
                        }
                    },
                }
            }
            (None, None) => Some(Trajectory::stationary(site.geodetic().to_ecef(), 0.0, duration)),
        };

        let m = &self.mask;
        let mask = match m.kind.as_str() {
            "open-sky" => {
                if !(0.0..90.0).contains(&m.cutoff_deg) {
                    bad("mask.cutoff_deg", format!("must be in [0, 90), got {}", m.cutoff_deg));
                    None
                } else {
                    Some(MaskProfile::Fixed(VisibilityMask::open_sky(m.cutoff_deg.to_radians())))
                }
            }
            "canyon" => {
                let mut ok = true;
                if m.aspects.is_empty() {
                    bad("mask.aspects", "canyon mask needs at least one aspect ratio".into());
                    ok = false;
                }
                for (i, a) in m.aspects.iter().enumerate() {
                    if !non_negative(*a) {
                        bad(&format!("mask.aspects[{i}]"), format!("must be >= 0, got {a}"));
                        ok = false;
                    }
                }
                if m.sectors == 0 {
                    bad("mask.sectors", "must be >= 1".into());
                    ok = false;
                }
                if !(0.0..90.0).contains(&m.cutoff_deg) {
                    bad("mask.cutoff_deg", format!("must be in [0, 90), got {}", m.cutoff_deg));
                    ok = false;
                }
                match &route {
                    None => {
                        bad("mask.kind", "canyon mask follows the street headings of [route]; add one".into());
                        None
                    }
                    Some(r) if ok && !r.segments.is_empty() => {
                        Some(MaskProfile::street_canyon_route(r, &m.aspects, m.sectors, m.cutoff_deg.to_radians()))
                    }
                    Some(_) => None,
                }
            }
            other => {
                bad("mask.kind", format!("unknown mask `{other}` (known: open-sky, canyon)"));
                None
            }
        };
        if let Some(Err(e)) = mask.as_ref().map(MaskProfile::validate) {
            bad("mask", e.to_string());
        }

        let p = &self.pvt;
        if !positive(p.step_s) {
            bad("pvt.step_s", format!("must be > 0, got {}", p.step_s));
        }
        if !non_negative(p.sigma_pseudorange_m) {
            bad("pvt.sigma_pseudorange_m", format!("must be >= 0, got {}", p.sigma_pseudorange_m));
        }
        if !non_negative(p.sigma_doppler_mps) {
            bad("pvt.sigma_doppler_mps", format!("must be >= 0, got {}", p.sigma_doppler_mps));
        }
        if !p.clock_bias_s.is_finite() {
            bad("pvt.clock_bias_s", "must be finite".into());
        }

        let mut pps_presets = Vec::new();
        for (i, name) in self.pps.presets.iter().enumerate() {
            match name.parse::<PpsPreset>() {
                Ok(p) => pps_presets.push(p),
                Err(e) => bad(&format!("pps.presets[{i}]"), e),
            }
        }
        if outputs.contains(&Output::Pps) && self.pps.presets.is_empty() {
            bad("pps.presets", "at least one of same-model, diff-model".into());
        }
        let pps_duration = self.pps.duration_s.unwrap_or(duration);
        if !positive(pps_duration) {
            bad("pps.duration_s", format!("must be > 0, got {pps_duration}"));
        }
        if !positive(self.pps.rate_hz) {
            bad("pps.rate_hz", format!("must be > 0, got {}", self.pps.rate_hz));
        }
        if !positive(self.pps.window_s) {
            bad("pps.window_s", format!("must be > 0, got {}", self.pps.window_s));
        }

        let n = &self.nodes;
        if n.count == 0 {
            bad("nodes.count", "must be >= 1".into());
        }
        for (v, path) in [
            (n.spacing_m, "nodes.spacing_m"),
            (n.speed_kmh, "nodes.speed_kmh"),
            (n.skew_ppm_sigma, "nodes.skew_ppm_sigma"),
            (n.offset_ms_max, "nodes.offset_ms_max"),
        ] {
            if !non_negative(v) {
                bad(path, format!("must be >= 0, got {v}"));
            }
        }
        if !n.heading_deg.is_finite() {
            bad("nodes.heading_deg", "must be finite".into());
        }
        let node_pps = match n.pps_preset.parse::<PpsPreset>() {
            Ok(p) => Some(p),
            Err(e) => {
                bad("nodes.pps_preset", e);
                None
            }
        };

        let c = &self.channel;
        let channel = ChannelModel {
            comm_range_m: c.comm_range_m,
            tx_delay: c.tx_delay,
            rx_delay: c.rx_delay,
            mac_stamp_jitter_us: c.mac_stamp_jitter_us,
            seed: 0,
        };
        if let Err(e) = channel.validate() {
            bad("channel", e.to_string());
        }

        let s = &self.sync;
        let mut protocols = Vec::new();
        for (i, name) in s.protocols.iter().enumerate() {
            match name.parse::<ProtocolKind>() {
                Ok(k) if protocols.contains(&k) => bad(&format!("sync.protocols[{i}]"), format!("duplicate `{name}`")),
                Ok(k) => protocols.push(k),
                Err(e) => bad(&format!("sync.protocols[{i}]"), e),
            }
        }
        if outputs.contains(&Output::Sync) && s.protocols.is_empty() {
            bad("sync.protocols", "select at least one of gnss, tpsn, rbs, ftsp, cts".into());
        }
        if !positive(s.sample_interval_s) {
            bad("sync.sample_interval_s", format!("must be > 0, got {}", s.sample_interval_s));
        }
        if !non_negative(s.warmup_s) {
            bad("sync.warmup_s", format!("must be >= 0, got {}", s.warmup_s));
        }
        let node_exists = |id: u32| (id as usize) < n.count;
        let pairs = match s.pairs.as_str() {
            "all" => Some(PairSelection::All),
            "disjoint" => Some(PairSelection::Disjoint),
            other => match other.strip_prefix("reference:").map(str::parse::<u32>) {
                Some(Ok(id)) if node_exists(id) => Some(PairSelection::Reference(id)),
                Some(Ok(id)) => {
                    bad("sync.pairs", format!("reference node {id} does not exist (count {})", n.count));
                    None
                }
                _ => {
                    bad("sync.pairs", format!("unknown pair selection `{other}` (known: all, disjoint, reference:<id>)"));
                    None
                }
            },
        };
        let gnss = GnssSyncConfig {
            pps_rate_hz: s.gnss.pps_rate_hz,
            adjust_limit_s: s.gnss.adjust_limit_s,
            skew_estimate_sigma: s.gnss.skew_estimate_sigma,
            seed: 0,
        };
        if let Err(e) = gnss.validate() {
            bad("sync.gnss", e.to_string());
        }
        let gnss_constellation = match s.gnss.constellation.parse::<ConstellationSet>() {
            Ok(c) => Some(c),
            Err(e) => {
                bad("sync.gnss.constellation", e);
                None
            }
        };
        if let Err(e) = s.tpsn.validate() {
            bad("sync.tpsn", e.to_string());
        }
        if !node_exists(s.tpsn.root_id) {
            bad("sync.tpsn.root_id", format!("node {} does not exist (count {})", s.tpsn.root_id, n.count));
        }
        if let Err(e) = s.rbs.validate() {
            bad("sync.rbs", e.to_string());
        }
        if let Some(id) = s.rbs.sender_id.filter(|&id| !node_exists(id)) {
            bad("sync.rbs.sender_id", format!("node {id} does not exist (count {})", n.count));
        }
        if let Err(e) = s.ftsp.validate() {
            bad("sync.ftsp", e.to_string());
        }
        if let Err(e) = s.cts.validate() {
            bad("sync.cts", e.to_string());
        }
        let mut grouped = std::collections::HashSet::new();
        for (g, group) in s.cts.initial_groups.iter().enumerate() {
            for &id in group {
                if !node_exists(id) {
                    bad(&format!("sync.cts.initial_groups[{g}]"), format!("node {id} does not exist (count {})", n.count));
                } else if !grouped.insert(id) {
                    bad(&format!("sync.cts.initial_groups[{g}]"), format!("node {id} is in more than one group"));
                }
            }
        }

        let seed = self.seed?;
        let duration = self.duration_s?;
        Some(Plan {
            name: self.name.clone(),
            seed,
            duration_s: duration,
            epoch_step_s: self.epoch_step_s,
            gdop_threshold: self.gdop_threshold,
            constellations,
            outputs,
            trajectory: trajectory?,
            mask: mask?,
            pvt: self.pvt.clone(),
            pps: PpsPlan { presets: pps_presets, duration_s: pps_duration, rate_hz: self.pps.rate_hz, window_s: self.pps.window_s },
            fleet: FleetConfig {
                count: n.count,
                origin: site.geodetic(),
                heading_deg: n.heading_deg,
                speed_kmh: n.speed_kmh,
                spacing_m: n.spacing_m,
                duration_s: duration,
                skew_ppm_sigma: n.skew_ppm_sigma,
                offset_ms_max: n.offset_ms_max,
                pps_preset: node_pps,
                seed: derive_seed(seed, "fleet"),
            },
            channel: ChannelModel { seed: derive_seed(seed, "channel"), ..channel },
            comparison: ComparisonConfig {
                protocols,
                sampling: SamplingConfig { pairs: pairs?, ..SamplingConfig::new(duration, s.sample_interval_s, s.warmup_s) },
                gnss: GnssSyncConfig { seed: derive_seed(seed, "gnss"), ..gnss },
                tpsn: s.tpsn,
                rbs: s.rbs,
                ftsp: s.ftsp,
                cts: s.cts.clone(),
            },
            gnss_gate: s.gnss.min_sats.map(|m| (m, gnss_constellation.unwrap_or(ConstellationSet::GpsPlusBds))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpsPlan {
    pub presets: Vec<PpsPreset>,
    pub duration_s: f64,
    pub rate_hz: f64,
    pub window_s: f64,
}

/// A validated scenario with every reference resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub name: String,
    pub seed: u64,
    pub duration_s: f64,
    pub epoch_step_s: f64,
    pub gdop_threshold: f64,
    pub constellations: Vec<ConstellationSet>,
    /// Sorted; change to run a subset.
    pub outputs: Vec<Output>,
    pub trajectory: Trajectory,
    pub mask: MaskProfile,
    pub pvt: PvtSpec,
    pub pps: PpsPlan,
    pub fleet: FleetConfig,
    pub channel: ChannelModel,
    pub comparison: ComparisonConfig,
    /// Minimum visible satellites for PPS, and the constellation counted.
    pub gnss_gate: Option<(usize, ConstellationSet)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvtRecord {
    pub t_s: f64,
    pub nsat: usize,
    pub valid: bool,
    pub gdop: f64,
    pub tdop: f64,
    pub position_error_m: f64,
    pub bias_ns: f64,
    /// Estimated minus true bias.
    pub clock_error_ns: f64,
    /// `σ_P · GDOP / c`, the combined bound often quoted for timing.
    pub timing_bound_gdop_ns: f64,
    /// `σ_P · TDOP / c`, the time component alone.
    pub timing_bound_tdop_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvtSummary {
    pub constellation: String,
    pub epochs: usize,
    pub solved: usize,
    pub valid_pct: f64,
    /// Over valid solutions; `None` when there are none.
    pub position_error_rms_m: Option<f64>,
    pub clock_error_rms_ns: Option<f64>,
    /// Predicted clock error RMS from the geometry.
    pub timing_bound_tdop_rms_ns: Option<f64>,
    pub timing_bound_gdop_rms_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvtRun {
    pub summary: PvtSummary,
    pub records: Vec<PvtRecord>,
}

/// Spread of the windowed means of a PPS series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedMeans {
    pub window_s: f64,
    pub min_ns: f64,
    pub max_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpsSession {
    pub preset: PpsPreset,
    pub series: OffsetSeries,
    pub stats: OffsetStats,
    /// `None` when the series is shorter than the window.
    pub windowed: Option<WindowedMeans>,
}

/// Everything one run produced. Files are rendered by [`RunArtifacts::files`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub scenario: String,
    pub seed: u64,
    pub availability: Vec<AvailabilityRun>,
    pub pvt: Vec<PvtRun>,
    pub pps: Vec<PpsSession>,
    pub sync: Option<ComparisonReport>,
}

impl Plan {
    fn fail(&self, stage: &'static str) -> impl Fn(String) -> ScenarioError + '_ {
        move |message| ScenarioError::Run { scenario: self.name.clone(), stage, message }
    }

    pub fn run(&self) -> Result<RunArtifacts, ScenarioError> {
        let mut out = RunArtifacts {
            scenario: self.name.clone(),
            seed: self.seed,
            availability: Vec::new(),
            pvt: Vec::new(),
            pps: Vec::new(),
            sync: None,
        };
        for o in &self.outputs {
            match o {
                Output::Availability => out.availability = self.run_availability()?,
                Output::Pvt => out.pvt = self.run_pvt()?,
                Output::Pps => out.pps = self.run_pps()?,
                Output::Sync => out.sync = Some(self.run_sync()?),
            }
        }
        Ok(out)
    }

    pub fn run_availability(&self) -> Result<Vec<AvailabilityRun>, ScenarioError> {
        self.constellations
            .iter()
            .map(|&c| {
                let elements = build_nominal_constellation(c, 0.0);
                availability_summary(&elements, c.label(), &self.trajectory, &self.mask, self.epoch_step_s, self.gdop_threshold)
                    .map_err(|e| self.fail("availability")(e.to_string()))
            })
            .collect()
    }

    pub fn run_pvt(&self) -> Result<Vec<PvtRun>, ScenarioError> {
        let fail = self.fail("pvt");
        let solver = SolverConfig { gdop_threshold: self.gdop_threshold, ..SolverConfig::default() };
        let (t0, t1) = (self.trajectory.start_time(), self.trajectory.end_time());
        let n = ((t1 - t0) / self.pvt.step_s + 1e-9).floor() as usize;
        let mut runs = Vec::new();
        for &c in &self.constellations {
            let elements = build_nominal_constellation(c, 0.0);
            let mut rng = derived_rng(self.seed, &format!("pvt-{}", c.label()));
            let mut records = Vec::new();
            for k in 0..=n {
                let t = t0 + k as f64 * self.pvt.step_s;
                let rx = self.trajectory.position_at(t);
                let velocity = self.trajectory.position_at(t + 0.5) - self.trajectory.position_at(t - 0.5);
                let mask = self.mask.mask_at(t);
                let sats: Vec<SatelliteObservable> = elements
                    .iter()
                    .map(|el| SatelliteObservable { sat_id: el.sat_id.clone(), state: propagate(el, t), clock: SatelliteClock::default() })
                    .filter(|s| crate::constellation::elevation_azimuth(&s.state.position_m, &rx).is_ok_and(|(e, a)| mask.admits(e, a)))
                    .collect();
                if sats.len() < 4 {
                    continue;
                }
                let truth = ReceiverTruth { position_m: rx, velocity_mps: velocity, clock_bias_s: self.pvt.clock_bias_s, clock_drift: 0.0 };
                let meas = simulate_pseudoranges_with(&truth, &sats, self.pvt.sigma_pseudorange_m, self.pvt.sigma_doppler_mps, &mut rng)
                    .map_err(|e| fail(e.to_string()))?;
                // singular geometry: no solution this epoch
                let Ok(sol) = solve_pvt(&meas, &InitialGuess::default(), &solver) else { continue };
                let bound = timing_uncertainty(self.pvt.sigma_pseudorange_m, &sol.dop);
                records.push(PvtRecord {
                    t_s: t,
                    nsat: sol.nsat,
                    valid: sol.valid,
                    gdop: sol.dop.gdop,
                    tdop: sol.dop.tdop,
                    position_error_m: (sol.position_m - rx).norm(),
                    bias_ns: sol.clock_bias_s * 1e9,
                    clock_error_ns: (sol.clock_bias_s - self.pvt.clock_bias_s) * 1e9,
                    timing_bound_gdop_ns: bound.gdop_bound_s * 1e9,
                    timing_bound_tdop_ns: bound.tdop_bound_s * 1e9,
                });
            }
            let valid: Vec<&PvtRecord> = records.iter().filter(|r| r.valid).collect();
            let rms = |f: &dyn Fn(&PvtRecord) -> f64| {
                (!valid.is_empty()).then(|| (valid.iter().map(|r| f(r).powi(2)).sum::<f64>() / valid.len() as f64).sqrt())
            };
            let summary = PvtSummary {
                constellation: c.label().into(),
                epochs: n + 1,
                solved: records.len(),
                valid_pct: valid.len() as f64 * 100.0 / (n + 1) as f64,
                position_error_rms_m: rms(&|r| r.position_error_m),
                clock_error_rms_ns: rms(&|r| r.clock_error_ns),
                timing_bound_tdop_rms_ns: rms(&|r| r.timing_bound_tdop_ns),
                timing_bound_gdop_rms_ns: rms(&|r| r.timing_bound_gdop_ns),
            };
            runs.push(PvtRun { summary, records });
        }
        Ok(runs)
    }

    pub fn run_pps(&self) -> Result<Vec<PpsSession>, ScenarioError> {
        let fail = self.fail("pps");
        let seed = derive_seed(self.seed, "pps");
        let n = (self.pps.duration_s * self.pps.rate_hz).floor() as usize + 1;
        self.pps
            .presets
            .iter()
            .map(|&preset| {
                let (a, b) = preset.pair(seed);
                let mut series = pairwise_pps_series(&a, &b, n, self.pps.rate_hz).map_err(|e| fail(e.to_string()))?;
                series.source = preset.name().to_string();
                let stats = offset_statistics(&series).map_err(|e| fail(e.to_string()))?;
                let windowed = moving_window_mean(&series, self.pps.window_s).ok().and_then(|m| {
                    let st = stats_of(m.offsets()).ok()?;
                    Some(WindowedMeans { window_s: self.pps.window_s, min_ns: st.min_ns, max_ns: st.max_ns })
                });
                Ok(PpsSession { preset, series, stats, windowed })
            })
            .collect()
    }

    pub fn run_sync(&self) -> Result<ComparisonReport, ScenarioError> {
        let fail = self.fail("sync");
        let mut nodes = build_platoon(&self.fleet).map_err(|e| fail(e.to_string()))?;
        if let Some((min_sats, c)) = self.gnss_gate {
            let elements = build_nominal_constellation(c, 0.0);
            let lead = &nodes[0].trajectory;
            let run = availability_summary(&elements, c.label(), lead, &self.mask, self.epoch_step_s, self.gdop_threshold)
                .map_err(|e| fail(e.to_string()))?;
            let trace = AvailabilityTrace::from_records(&run.records, min_sats);
            for n in &mut nodes {
                n.gnss_available = Some(trace.clone());
            }
        }
        compare_protocols(&nodes, &self.channel, &self.comparison).map_err(|e| fail(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct AvailabilityFile<'a> {
    scenario: &'a str,
    seed: u64,
    epoch_step_s: f64,
    reports: Vec<&'a AvailabilityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PpsFileEntry<'a> {
    preset: &'a str,
    stats: &'a OffsetStats,
    windowed_means: Option<WindowedMeans>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SyncFileEntry<'a> {
    protocol: &'a str,
    summary: &'a ErrorSummary,
    warmup_s: f64,
    message_count: u64,
    rounds: u64,
    messages_per_node_per_round: f64,
    unsynced: &'a [u32],
    nodes: &'a [NodeReport],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SyncFile<'a> {
    scenario: &'a str,
    seed: u64,
    node_count: usize,
    /// Best in-band RMS over GNSS RMS.
    separation_ratio: Option<f64>,
    protocols: Vec<SyncFileEntry<'a>>,
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("artifact types serialize");
    s.push('\n');
    s.into_bytes()
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunArtifacts {
    /// Output files by name, in a fixed order.
    pub fn files(&self) -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        if !self.availability.is_empty() {
            let doc = AvailabilityFile {
                scenario: &self.scenario,
                seed: self.seed,
                epoch_step_s: self.availability[0].records.get(1).map_or(0.0, |r| r.t - self.availability[0].records[0].t),
                reports: self.availability.iter().map(|r| &r.report).collect(),
            };
            files.push(("availability.json".into(), json(&doc)));
            let mut csv = format!("constellation,{EPOCH_CSV_HEADER}\n");
            for run in &self.availability {
                for r in &run.records {
                    let ids: Vec<&str> = r.visible_ids.iter().map(|s| s.0.as_str()).collect();
                    csv.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        run.report.constellation,
                        r.t,
                        r.nsat,
                        r.class.as_str(),
                        csv_opt(r.gdop),
                        ids.join(";")
                    ));
                }
            }
            files.push(("availability_epochs.csv".into(), csv.into_bytes()));
        }
        if !self.pvt.is_empty() {
            let summaries: Vec<&PvtSummary> = self.pvt.iter().map(|r| &r.summary).collect();
            files.push(("pvt.json".into(), json(&summaries)));
            let mut csv = String::from(
                "constellation,t_s,valid,nsat,gdop,tdop,bias_ns,clock_error_ns,position_error_m,timing_bound_gdop_ns,timing_bound_tdop_ns\n",
            );
            for run in &self.pvt {
                for r in &run.records {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{}\n",
                        run.summary.constellation,
                        r.t_s,
                        r.valid,
                        r.nsat,
                        r.gdop,
                        r.tdop,
                        r.bias_ns,
                        r.clock_error_ns,
                        r.position_error_m,
                        r.timing_bound_gdop_ns,
                        r.timing_bound_tdop_ns
                    ));
                }
            }
            files.push(("pvt.csv".into(), csv.into_bytes()));
        }
        if !self.pps.is_empty() {
            let entries: Vec<PpsFileEntry> =
                self.pps.iter().map(|s| PpsFileEntry { preset: s.preset.name(), stats: &s.stats, windowed_means: s.windowed }).collect();
            files.push(("pps_stats.json".into(), json(&entries)));
            for s in &self.pps {
                let mut buf = Vec::new();
                s.series.write_csv(&mut buf).expect("writing to memory");
                files.push((format!("pps_{}.csv", s.preset.name()), buf));
            }
        }
        if let Some(report) = &self.sync {
            let doc = SyncFile {
                scenario: &self.scenario,
                seed: self.seed,
                node_count: report.node_count,
                separation_ratio: report.separation_ratio(),
                protocols: report
                    .results
                    .iter()
                    .map(|r| SyncFileEntry {
                        protocol: r.protocol.label(),
                        summary: &r.summary,
                        warmup_s: r.warmup_s,
                        message_count: r.message_count,
                        rounds: r.rounds,
                        messages_per_node_per_round: r.messages_per_node_per_round,
                        unsynced: &r.unsynced,
                        nodes: &r.nodes,
                    })
                    .collect(),
            };
            files.push(("sync_comparison.json".into(), json(&doc)));
            for r in &report.results {
                let mut buf = Vec::new();
                r.write_traces_csv(&mut buf, true).expect("writing to memory");
                files.push((format!("sync_{}.csv", r.protocol.label().to_ascii_lowercase()), buf));
            }
        }
        files
    }

    /// Human-readable tables for every pipeline that ran.
    pub fn text(&self) -> String {
        let mut s = String::new();
        if !self.availability.is_empty() {
            let reports: Vec<AvailabilityReport> = self.availability.iter().map(|r| r.report.clone()).collect();
            s.push_str("Availability of valid GNSS position (%)\n");
            s.push_str(&availability_table(&reports));
            s.push('\n');
            s.push_str(&gdop_table(&reports));
            s.push('\n');
        }
        if !self.pvt.is_empty() {
            s.push_str(&format!(
                "{:<10}{:>8}{:>8}{:>10}{:>14}{:>16}{:>16}{:>16}\n",
                "PVT", "epochs", "solved", "valid %", "pos RMS (m)", "clock RMS (ns)", "σ·TDOP/c (ns)", "σ·GDOP/c (ns)"
            ));
            for r in &self.pvt {
                let m = &r.summary;
                let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
                s.push_str(&format!(
                    "{:<10}{:>8}{:>8}{:>10.2}{:>14}{:>16}{:>16}{:>16}\n",
                    m.constellation,
                    m.epochs,
                    m.solved,
                    m.valid_pct,
                    f(m.position_error_rms_m),
                    f(m.clock_error_rms_ns),
                    f(m.timing_bound_tdop_rms_ns),
                    f(m.timing_bound_gdop_rms_ns)
                ));
            }
            s.push('\n');
        }
        if !self.pps.is_empty() {
            let rows: Vec<(String, OffsetStats)> = self.pps.iter().map(|p| (p.preset.name().to_string(), p.stats)).collect();
            s.push_str(&stats_table("Relative PPS offset (ns)", &rows));
            for p in &self.pps {
                match p.windowed {
                    Some(w) => s.push_str(&format!(
                        "{}: {:.0} s moving mean within [{:.2}, {:.2}] ns\n",
                        p.preset.name(),
                        w.window_s,
                        w.min_ns,
                        w.max_ns
                    )),
                    None => s.push_str(&format!("{}: series shorter than the moving-mean window\n", p.preset.name())),
                }
            }
            s.push('\n');
        }
        if let Some(r) = &self.sync {
            s.push_str(&format!("Pairwise sync error, {} nodes\n", r.node_count));
            s.push_str(&r.table());
        }
        s
    }
}

/// Writes `files` into `dir`: every file goes to a hidden temporary first
/// and is renamed only after all temporaries are written.
pub fn write_atomically(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), ScenarioError> {
    let werr = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScenarioError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(werr(dir))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(werr(&tmp)(e));
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in &staged {
        fs::rename(tmp, dest).map_err(werr(dest))?;
    }
    Ok(())
}
