//! PPS offset statistics, moving-window means and the timing requirement
//! calculators.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SPEED_OF_LIGHT;

/// Header line of the PPS offset CSV format.
pub const PPS_CSV_HEADER: &str = "t_s,offset_ns";

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("empty input")]
    EmptyInput,
    #[error("timestamps must be strictly increasing (sample {index}: {t} after {prev})")]
    NonMonotonic { index: usize, prev: f64, t: f64 },
    #[error("window of {window_s} s is longer than the series span of {span_s} s")]
    WindowTooLong { window_s: f64, span_s: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("missing header: expected `{expected}`, found `{found}`")]
    MissingHeader { expected: String, found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A time-ordered series of offsets in nanoseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetSeries {
    samples: Vec<(f64, f64)>,
    pub source: String,
}

impl OffsetSeries {
    pub fn new(samples: Vec<(f64, f64)>, source: impl Into<String>) -> Result<Self, AnalysisError> {
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(AnalysisError::NonMonotonic { index: i + 1, prev: w[0].0, t: w[1].0 });
            }
        }
        Ok(Self { samples, source: source.into() })
    }

    /// Samples at `t = k / rate_hz`.
    pub fn from_offsets(offsets_ns: &[f64], rate_hz: f64, source: impl Into<String>) -> Self {
        let samples = offsets_ns.iter().enumerate().map(|(k, o)| (k as f64 / rate_hz, *o)).collect();
        Self { samples, source: source.into() }
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn span_s(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{PPS_CSV_HEADER}")?;
        for (t, o) in &self.samples {
            writeln!(w, "{t},{o}")?;
        }
        Ok(())
    }

    /// Parses `t_s,offset_ns` CSV. The header is required; `#` lines are
    /// skipped. Errors carry 1-based line numbers.
    pub fn read_csv<R: Read>(reader: R, source: impl Into<String>) -> Result<Self, AnalysisError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).has_headers(true).from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let found: Vec<&str> = headers.iter().collect();
        if found != ["t_s", "offset_ns"] {
            return Err(AnalysisError::MissingHeader { expected: PPS_CSV_HEADER.to_owned(), found: found.join(",") });
        }
        let mut samples = Vec::new();
        let mut lines = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != 2 {
                return Err(AnalysisError::Csv { line, message: format!("expected 2 fields, found {}", rec.len()) });
            }
            let parse =
                |i: usize| rec[i].parse::<f64>().map_err(|e| AnalysisError::Csv { line, message: format!("field `{}`: {e}", &rec[i]) });
            samples.push((parse(0)?, parse(1)?));
            lines.push(line);
        }
        Self::new(samples, source).map_err(|e| match e {
            AnalysisError::NonMonotonic { index, prev, t } => {
                AnalysisError::Csv { line: lines[index], message: format!("timestamp {t} is not after {prev}") }
            }
            other => other,
        })
    }
}

fn csv_err(e: csv::Error) -> AnalysisError {
    AnalysisError::Csv { line: e.position().map(|p| p.line()).unwrap_or(0), message: e.to_string() }
}

/// Population statistics of an offset series, ns.
///
/// `std` is the population standard deviation, so `rms² = mean² + std²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetStats {
    pub n: usize,
    pub mean_ns: f64,
    pub std_ns: f64,
    pub rms_ns: f64,
    /// Largest |offset|.
    pub peak_ns: f64,
    pub min_ns: f64,
    pub max_ns: f64,
}

pub fn offset_statistics(series: &OffsetSeries) -> Result<OffsetStats, AnalysisError> {
    stats_of(series.offsets())
}

/// Statistics over any iterator of values; same definitions as [`offset_statistics`].
pub fn stats_of<I: IntoIterator<Item = f64>>(values: I) -> Result<OffsetStats, AnalysisError> {
    let mut n = 0usize;
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let values: Vec<f64> = values.into_iter().collect();
    for &v in &values {
        n += 1;
        sum += v;
        sum_sq += v * v;
        min = min.min(v);
        max = max.max(v);
    }
    if n == 0 {
        return Err(AnalysisError::EmptyInput);
    }
    let mean = sum / n as f64;
    // two-pass variance for accuracy; rms from the raw second moment
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    Ok(OffsetStats {
        n,
        mean_ns: mean,
        std_ns: var.sqrt(),
        rms_ns: (sum_sq / n as f64).sqrt(),
        peak_ns: min.abs().max(max.abs()),
        min_ns: min,
        max_ns: max,
    })
}

/// Centered moving average over `window_s`.
///
/// Only samples whose full window `[t − w/2, t + w/2]` lies inside the
/// series span are emitted.
pub fn moving_window_mean(series: &OffsetSeries, window_s: f64) -> Result<OffsetSeries, AnalysisError> {
    if !(window_s > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("window must be positive, got {window_s}")));
    }
    let s = series.samples();
    if s.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let span = series.span_s();
    if window_s > span {
        return Err(AnalysisError::WindowTooLong { window_s, span_s: span });
    }
    let half = window_s / 2.0;
    let (t0, t1) = (s[0].0, s[s.len() - 1].0);
    let mut prefix = Vec::with_capacity(s.len() + 1);
    prefix.push(0.0f64);
    for (_, o) in s {
        prefix.push(prefix.last().unwrap() + o);
    }
    let mut out = Vec::new();
    let (mut lo, mut hi) = (0usize, 0usize);
    for &(t, _) in s {
        if t - half < t0 || t + half > t1 {
            continue;
        }
        while s[lo].0 < t - half {
            lo += 1;
        }
        while hi < s.len() && s[hi].0 <= t + half {
            hi += 1;
        }
        out.push((t, (prefix[hi] - prefix[lo]) / (hi - lo) as f64));
    }
    if out.is_empty() {
        return Err(AnalysisError::WindowTooLong { window_s, span_s: span });
    }
    Ok(OffsetSeries { samples: out, source: format!("{} (moving mean {window_s} s)", series.source) })
}

/// Aligned text table with Peak / Mean / STD / RMS columns, one row per session.
pub fn stats_table(title: &str, rows: &[(String, OffsetStats)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "{:<16} {:>10} {:>9} {:>9} {:>9} {:>9}", "Test Session", "Peak", "Mean", "STD", "RMS", "N");
    for (label, st) in rows {
        let _ = writeln!(
            s,
            "{:<16} {:>10} {:>9.2} {:>9.2} {:>9.2} {:>9}",
            label,
            format!("± {:.1}", st.peak_ns),
            st.mean_ns,
            st.std_ns,
            st.rms_ns,
            st.n
        );
    }
    s
}

/// Extra TDMA slots gained by shrinking every slot's guard interval by
/// `delta_guard_s`: `floor(frame_slots · delta_guard / slot_duration)`.
pub fn guard_interval_gain(frame_slots: u64, slot_duration_s: f64, delta_guard_s: f64) -> Result<u64, AnalysisError> {
    if frame_slots == 0 || !(slot_duration_s > 0.0) || !(delta_guard_s >= 0.0) {
        return Err(AnalysisError::InvalidArgument("frame slots and slot duration must be positive, guard delta non-negative".into()));
    }
    // Durations given in μs round-trip through f64 with representation error;
    // nudge before flooring so an exact integer ratio is not lost.
    let ratio = frame_slots as f64 * delta_guard_s / slot_duration_s;
    Ok((ratio * (1.0 + 1e-12)).floor() as u64)
}

/// Range error caused by a timing error in one-way radio ranging, m.
pub fn ranging_error(timing_error_s: f64) -> Result<f64, AnalysisError> {
    if !(timing_error_s >= 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("timing error must be non-negative, got {timing_error_s}")));
    }
    Ok(SPEED_OF_LIGHT * timing_error_s)
}

/// Relative position error of a vehicle moving at `speed` when its time tag is off by `timing_error_s`, m.
pub fn relative_position_error(speed_m_per_s: f64, timing_error_s: f64) -> Result<f64, AnalysisError> {
    if !(speed_m_per_s >= 0.0) || !(timing_error_s >= 0.0) {
        return Err(AnalysisError::InvalidArgument("speed and timing error must be non-negative".into()));
    }
    Ok(speed_m_per_s * timing_error_s)
}

/// Timing accuracy needed to keep the relative position error within tolerance, s.
pub fn required_timing_accuracy(speed_m_per_s: f64, position_tolerance_m: f64) -> Result<f64, AnalysisError> {
    if !(speed_m_per_s > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("requirement undefined for speed {speed_m_per_s} m/s (must be positive)")));
    }
    if !(position_tolerance_m >= 0.0) {
        return Err(AnalysisError::InvalidArgument("position tolerance must be non-negative".into()));
    }
    Ok(position_tolerance_m / speed_m_per_s)
}

/// Two-sample Kolmogorov–Smirnov test. Returns `(D, p)` with the asymptotic
/// p-value (Stephens' small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64), AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok((d, kolmogorov_q(lambda)))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}
