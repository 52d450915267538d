//! Unit-suffixed numbers: `10ns`, `496us`, `110kmh`, `1.5km`. A bare number
//! is rejected because the unit would be a guess.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Time,
    Speed,
    Length,
}

impl Kind {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Kind::Time => &[("ns", 1e-9), ("us", 1e-6), ("µs", 1e-6), ("ms", 1e-3), ("s", 1.0)],
            Kind::Speed => &[("kmh", 1.0 / 3.6), ("km/h", 1.0 / 3.6), ("mps", 1.0), ("m/s", 1.0)],
            Kind::Length => &[("mm", 1e-3), ("cm", 1e-2), ("m", 1.0), ("km", 1e3)],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Time => "time",
            Kind::Speed => "speed",
            Kind::Length => "length",
        }
    }
}

/// Value in SI base units (s, m/s, m).
pub fn parse(input: &str, kind: Kind) -> Result<f64, String> {
    let s = input.trim();
    let split = s.char_indices().find(|&(i, c)| c.is_alphabetic() || c == 'µ' || (c == '/' && i > 0)).map_or(s.len(), |(i, _)| i);
    let (num, unit) = s.split_at(split);
    let known: Vec<&str> = kind.units().iter().map(|(u, _)| *u).collect();
    if unit.is_empty() {
        return Err(format!("`{input}` has no unit; give a {} such as {}", kind.name(), example(kind)));
    }
    let scale = kind
        .units()
        .iter()
        .find(|(u, _)| u.eq_ignore_ascii_case(unit.trim()))
        .map(|(_, f)| *f)
        .ok_or_else(|| format!("unknown {} unit `{unit}` in `{input}` (known: {})", kind.name(), known.join(", ")))?;
    let value: f64 = num.trim().parse().map_err(|_| format!("`{input}` is not a number with a unit"))?;
    if !value.is_finite() {
        return Err(format!("`{input}` is not finite"));
    }
    Ok(value * scale)
}

fn example(kind: Kind) -> &'static str {
    match kind {
        Kind::Time => "10ns, 496us or 10ms",
        Kind::Speed => "110kmh or 30mps",
        Kind::Length => "3m or 1.5km",
    }
}

pub fn time(s: &str) -> Result<f64, String> {
    parse(s, Kind::Time)
}

pub fn speed(s: &str) -> Result<f64, String> {
    parse(s, Kind::Speed)
}

pub fn length(s: &str) -> Result<f64, String> {
    parse(s, Kind::Length)
}

/// Seconds in the largest unit that keeps the value at or above 1.
pub fn format_time(v: f64) -> String {
    let a = v.abs();
    if a >= 1.0 {
        format!("{v:.3} s")
    } else if a >= 1e-3 {
        format!("{:.3} ms", v * 1e3)
    } else if a >= 1e-6 {
        format!("{:.3} us", v * 1e6)
    } else {
        format!("{:.3} ns", v * 1e9)
    }
}
