//! `vts`: run scenarios, analyze PPS logs and evaluate timing requirement
//! calculators.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input, 3 runtime failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod units;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use vts_core::analysis::{
    guard_interval_gain, moving_window_mean, offset_statistics, ranging_error, relative_position_error, required_timing_accuracy, stats_of,
    stats_table, OffsetSeries,
};
use vts_core::clocks::PpsPreset;
use vts_core::scenario::{write_atomically, Output, RunArtifacts, Scenario, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "vts", version, about = "GNSS time synchronization for vehicular networks: simulation and analysis")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "VTS_OUT_DIR", default_value = "vts-out")]
    out: PathBuf,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Satellite visibility and GDOP availability along the scenario path.
    Availability(ScenarioArgs),
    /// Simulate or analyze 1 PPS relative offsets.
    #[command(subcommand)]
    Pps(PpsCommand),
    /// Compare GNSS synchronization with in-band protocols.
    Sync(ScenarioArgs),
    /// Timing requirement calculators.
    #[command(subcommand)]
    Calc(CalcCommand),
    /// Run every output a scenario requests and bundle the files.
    Report(ScenarioArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file, or the name of a shipped preset.
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario duration, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Override the GDOP threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum PpsCommand {
    /// Relative offset of a receiver pair from a preset error model.
    Simulate {
        #[arg(long, default_value = "same-model")]
        preset: String,
        #[arg(long, default_value_t = 24.0)]
        hours: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        window_hours: f64,
    },
    /// Statistics of a `t_s,offset_ns` CSV log.
    Analyze {
        csv: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        window_hours: f64,
    },
}

#[derive(Debug, Subcommand)]
enum CalcCommand {
    /// Extra TDMA slots from shrinking every guard interval.
    Guard {
        #[arg(long)]
        slots: u64,
        /// Slot duration, e.g. `496us`.
        #[arg(long)]
        slot: String,
        /// Guard reduction per slot, e.g. `10us`.
        #[arg(long)]
        delta: String,
    },
    /// One-way ranging error from a timing error, e.g. `10ns`.
    Ranging { timing_error: String },
    /// Relative position error of a moving vehicle, e.g. `110kmh 10ms`.
    Relpos { speed: String, timing_error: String },
    /// Timing accuracy needed to keep position error within a tolerance.
    RequiredTiming { speed: String, tolerance: String },
}

enum Failure {
    Usage(String),
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } | ScenarioError::Parse(_) | ScenarioError::Invalid(_) => Failure::Invalid(e.to_string()),
            ScenarioError::Run { .. } | ScenarioError::Write { .. } => Failure::Runtime(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Availability(a) => scenario_command(cli, a, Some(Output::Availability)),
        Command::Sync(a) => scenario_command(cli, a, Some(Output::Sync)),
        Command::Report(a) => scenario_command(cli, a, None),
        Command::Pps(PpsCommand::Simulate { preset, hours, seed, window_hours }) => pps_simulate(cli, preset, *hours, *seed, *window_hours),
        Command::Pps(PpsCommand::Analyze { csv, window_hours }) => pps_analyze(cli, csv, *window_hours),
        Command::Calc(c) => calc(cli.format, c),
    }
}

fn load(a: &ScenarioArgs, only: Option<Output>) -> Result<Scenario> {
    let mut s = Scenario::load_or_preset(&a.scenario)?;
    if let Some(seed) = a.seed {
        s.seed = Some(seed);
    }
    if let Some(d) = a.duration {
        s.duration_s = Some(d);
    }
    if let Some(t) = a.threshold {
        s.gdop_threshold = t;
    }
    if let Some(o) = only {
        s.outputs = vec![o.name().to_string()];
    }
    Ok(s)
}

fn scenario_command(cli: &Cli, a: &ScenarioArgs, only: Option<Output>) -> Result<String> {
    let plan = load(a, only)?.validate()?;
    let artifacts = plan.run()?;
    let mut files = artifacts.files();
    let text = match only {
        Some(Output::Sync) => ranked_sync_text(&artifacts),
        _ => artifacts.text(),
    };
    if only.is_none() {
        files.push(("report.txt".into(), text.clone().into_bytes()));
    }
    write_atomically(&cli.out, &files)?;
    Ok(render(cli.format, &text, &files))
}

/// Text, or the first JSON / CSV artifact.
fn render(format: Format, text: &str, files: &[(String, Vec<u8>)]) -> String {
    let ext = match format {
        Format::Table => return text.to_string(),
        Format::Json => ".json",
        Format::Csv => ".csv",
    };
    files.iter().find(|(n, _)| n.ends_with(ext)).map(|(_, b)| String::from_utf8_lossy(b).into_owned()).unwrap_or_default()
}

fn ranked_sync_text(artifacts: &RunArtifacts) -> String {
    let Some(report) = &artifacts.sync else { return String::new() };
    let mut ranked = report.clone();
    ranked.results.sort_by(|a, b| a.summary.rms_s.total_cmp(&b.summary.rms_s));
    format!("Pairwise sync error, {} nodes, ranked by RMS\n{}", ranked.node_count, ranked.table())
}

fn pps_simulate(cli: &Cli, preset: &str, hours: f64, seed: u64, window_hours: f64) -> Result<String> {
    let preset: PpsPreset = preset.parse().map_err(Failure::Usage)?;
    if !(hours > 0.0) || !(window_hours > 0.0) {
        return Err(Failure::Usage("--hours and --window-hours must be positive".into()));
    }
    let src = format!(
        "name = \"pps-simulate\"\nseed = {seed}\nduration_s = {:?}\noutputs = [\"pps\"]\n[pps]\npresets = [\"{}\"]\nwindow_s = {:?}\n",
        hours * 3600.0,
        preset.name(),
        window_hours * 3600.0
    );
    let artifacts = Scenario::from_toml_str(&src, ".")?.validate()?.run()?;
    let files = artifacts.files();
    write_atomically(&cli.out, &files)?;
    Ok(render(cli.format, &artifacts.text(), &files))
}

fn pps_analyze(cli: &Cli, path: &Path, window_hours: f64) -> Result<String> {
    if !(window_hours > 0.0) {
        return Err(Failure::Usage("--window-hours must be positive".into()));
    }
    let file = fs::File::open(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let series = OffsetSeries::read_csv(std::io::BufReader::new(file), path.display().to_string())
        .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let stats = offset_statistics(&series).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let window_s = window_hours * 3600.0;
    let windowed = moving_window_mean(&series, window_s).ok().and_then(|m| stats_of(m.offsets()).ok());
    let label = path.file_stem().map_or("series".into(), |s| s.to_string_lossy().into_owned());
    let mut text = stats_table("Relative PPS offset (ns)", &[(label.clone(), stats)]);
    match &windowed {
        Some(w) => text.push_str(&format!("{window_hours} h moving mean within [{:.2}, {:.2}] ns\n", w.min_ns, w.max_ns)),
        None => text.push_str(&format!("series spans {:.0} s, shorter than the {window_hours} h window\n", series.span_s())),
    }
    let doc = json!({
        "source": path.display().to_string(),
        "stats": stats,
        "windowed_means": windowed.map(|w| json!({ "window_s": window_s, "min_ns": w.min_ns, "max_ns": w.max_ns })),
    });
    let mut body = serde_json::to_string_pretty(&doc).expect("json value");
    body.push('\n');
    let csv = format!(
        "source,n,mean_ns,std_ns,rms_ns,peak_ns,min_ns,max_ns\n{label},{},{},{},{},{},{},{}\n",
        stats.n, stats.mean_ns, stats.std_ns, stats.rms_ns, stats.peak_ns, stats.min_ns, stats.max_ns
    );
    let files = vec![("pps_analysis.json".to_string(), body.into_bytes()), ("pps_analysis.csv".to_string(), csv.into_bytes())];
    write_atomically(&cli.out, &files).map_err(Failure::from)?;
    Ok(render(cli.format, &text, &files))
}

struct CalcResult {
    value: f64,
    unit: &'static str,
    text: String,
    formula: String,
    note: Option<String>,
}

fn calc(format: Format, c: &CalcCommand) -> Result<String> {
    let usage = Failure::Usage;
    let invalid = |e: vts_core::analysis::AnalysisError| Failure::Invalid(e.to_string());
    let r = match c {
        CalcCommand::Guard { slots, slot, delta } => {
            let slot_s = units::time(slot).map_err(usage)?;
            let delta_s = units::time(delta).map_err(usage)?;
            let n = guard_interval_gain(*slots, slot_s, delta_s).map_err(invalid)?;
            let quoted = (*slots == 2016 && (slot_s - 496e-6).abs() < 1e-12 && (delta_s - 10e-6).abs() < 1e-12)
                .then(|| "45 extra slots is sometimes quoted for these inputs; it does not follow from them".to_string());
            CalcResult {
                value: n as f64,
                unit: "slots",
                text: n.to_string(),
                formula: format!(
                    "floor(slots x delta / slot) = floor({slots} x {} / {})",
                    units::format_time(delta_s),
                    units::format_time(slot_s)
                ),
                note: quoted,
            }
        }
        CalcCommand::Ranging { timing_error } => {
            let dt = units::time(timing_error).map_err(usage)?;
            let d = ranging_error(dt).map_err(invalid)?;
            CalcResult {
                value: d,
                unit: "m",
                text: format!("{d:.3} m"),
                formula: format!("c x dt, dt = {}", units::format_time(dt)),
                note: None,
            }
        }
        CalcCommand::Relpos { speed, timing_error } => {
            let v = units::speed(speed).map_err(usage)?;
            let dt = units::time(timing_error).map_err(usage)?;
            let d = relative_position_error(v, dt).map_err(invalid)?;
            CalcResult {
                value: d,
                unit: "m",
                text: format!("{d:.3} m"),
                formula: format!("v x dt, v = {v:.3} m/s, dt = {}", units::format_time(dt)),
                note: None,
            }
        }
        CalcCommand::RequiredTiming { speed, tolerance } => {
            let v = units::speed(speed).map_err(usage)?;
            let d = units::length(tolerance).map_err(usage)?;
            let dt = required_timing_accuracy(v, d).map_err(invalid)?;
            CalcResult {
                value: dt,
                unit: "s",
                text: units::format_time(dt),
                formula: format!("tolerance / v, tolerance = {d} m, v = {v:.3} m/s"),
                note: None,
            }
        }
    };
    Ok(match format {
        Format::Table => {
            let mut s = format!("{}\n  = {}\n", r.text, r.formula);
            if let Some(n) = &r.note {
                s.push_str(&format!("  note: {n}\n"));
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({
                "value": r.value,
                "unit": r.unit,
                "formula": r.formula,
                "note": r.note,
            }))
            .expect("json value");
            s.push('\n');
            s
        }
        Format::Csv => format!("value,unit\n{},{}\n", r.value, r.unit),
    })
}
