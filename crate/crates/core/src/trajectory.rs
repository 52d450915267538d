//! Time-indexed receiver positions and street routes.

use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{ecef_to_enu_rotation, Geodetic};

pub const TRAJECTORY_CSV_HEADER: &str = "t_s,x_m,y_m,z_m";

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("trajectory is empty")]
    Empty,
    #[error("trajectory times must be strictly increasing (point {index})")]
    NonMonotonic { index: usize },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("route has no segments or a segment has non-positive duration")]
    InvalidRoute,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t_s: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub z_m: f64,
}

impl TrajectoryPoint {
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x_m, self.y_m, self.z_m)
    }
}

/// Earth-fixed positions, linearly interpolated between samples and held
/// constant outside the sampled interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn new(points: Vec<TrajectoryPoint>) -> Result<Self, TrajectoryError> {
        if points.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if let Some(i) = points.windows(2).position(|w| !(w[1].t_s > w[0].t_s)) {
            return Err(TrajectoryError::NonMonotonic { index: i + 1 });
        }
        Ok(Self { points })
    }

    pub fn stationary(position: Vector3<f64>, t_start: f64, t_end: f64) -> Self {
        let p = |t_s| TrajectoryPoint { t_s, x_m: position.x, y_m: position.y, z_m: position.z };
        let points = if t_end > t_start { vec![p(t_start), p(t_end)] } else { vec![p(t_start)] };
        Self { points }
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn start_time(&self) -> f64 {
        self.points[0].t_s
    }

    pub fn end_time(&self) -> f64 {
        self.points[self.points.len() - 1].t_s
    }

    pub fn position_at(&self, t: f64) -> Vector3<f64> {
        let idx = self.points.partition_point(|p| p.t_s <= t);
        if idx == 0 {
            return self.points[0].position();
        }
        if idx == self.points.len() {
            return self.points[idx - 1].position();
        }
        let (a, b) = (&self.points[idx - 1], &self.points[idx]);
        let f = (t - a.t_s) / (b.t_s - a.t_s);
        a.position() + (b.position() - a.position()) * f
    }

    /// Same path displaced by a constant earth-fixed vector.
    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| TrajectoryPoint { t_s: p.t_s, x_m: p.x_m + offset.x, y_m: p.y_m + offset.y, z_m: p.z_m + offset.z })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.t_s, p.x_m, p.y_m, p.z_m)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, TrajectoryError> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        for rec in rdr.deserialize::<TrajectoryPoint>() {
            points
                .push(rec.map_err(|e| TrajectoryError::Csv { line: e.position().map(|p| p.line()).unwrap_or(0), message: e.to_string() })?);
        }
        Self::new(points)
    }
}

/// One straight street section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteSegment {
    /// Direction of travel, degrees clockwise from north.
    pub heading_deg: f64,
    pub speed_kmh: f64,
    pub duration_s: f64,
}

/// A drive made of straight segments starting at `origin`, repeated until
/// the requested duration is covered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub origin: Geodetic,
    pub segments: Vec<RouteSegment>,
}

impl Route {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.segments.is_empty() || self.segments.iter().any(|s| !(s.duration_s > 0.0) || !(s.speed_kmh >= 0.0)) {
            return Err(TrajectoryError::InvalidRoute);
        }
        Ok(())
    }

    fn loop_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    /// Segment index active at time `t` (route time starts at 0).
    pub fn segment_at(&self, t: f64) -> usize {
        let mut rem = t.max(0.0) % self.loop_duration();
        for (i, s) in self.segments.iter().enumerate() {
            if rem < s.duration_s {
                return i;
            }
            rem -= s.duration_s;
        }
        self.segments.len() - 1
    }

    pub fn heading_at(&self, t: f64) -> f64 {
        self.segments[self.segment_at(t)].heading_deg.to_radians()
    }

    /// Segment boundary times in `[0, duration_s)`, with the active heading.
    pub fn heading_changes(&self, duration_s: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut t = 0.0;
        'outer: loop {
            for s in &self.segments {
                if t >= duration_s {
                    break 'outer;
                }
                out.push((t, s.heading_deg.to_radians()));
                t += s.duration_s;
            }
        }
        out
    }

    /// Sampled trajectory over `[0, duration_s]`, vertices at every segment
    /// boundary and at least every `max_dt` seconds.
    pub fn trajectory(&self, duration_s: f64, max_dt: f64) -> Result<Trajectory, TrajectoryError> {
        self.validate()?;
        let origin = self.origin.to_ecef();
        let to_ecef = ecef_to_enu_rotation(&origin).transpose();
        let mut points = Vec::new();
        let mut enu = Vector3::<f64>::zeros();
        let mut t = 0.0;
        let push = |points: &mut Vec<TrajectoryPoint>, t: f64, enu: &Vector3<f64>| {
            let p = origin + to_ecef * enu;
            if points.last().is_none_or(|l: &TrajectoryPoint| t > l.t_s) {
                points.push(TrajectoryPoint { t_s: t, x_m: p.x, y_m: p.y, z_m: p.z });
            }
        };
        push(&mut points, 0.0, &enu);
        'outer: loop {
            for s in &self.segments {
                let h = s.heading_deg.to_radians();
                let v = Vector3::new(h.sin(), h.cos(), 0.0) * (s.speed_kmh / 3.6);
                let seg_end = (t + s.duration_s).min(duration_s);
                let steps = ((seg_end - t) / max_dt).ceil().max(1.0) as usize;
                let dt = (seg_end - t) / steps as f64;
                for _ in 0..steps {
                    enu += v * dt;
                    t += dt;
                    push(&mut points, t, &enu);
                }
                t = seg_end;
                if t >= duration_s {
                    break 'outer;
                }
            }
        }
        Trajectory::new(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_clamps() {
        let tr = Trajectory::new(vec![
            TrajectoryPoint { t_s: 0.0, x_m: 0.0, y_m: 0.0, z_m: 0.0 },
            TrajectoryPoint { t_s: 10.0, x_m: 10.0, y_m: -20.0, z_m: 0.0 },
        ])
        .unwrap();
        assert_eq!(tr.position_at(5.0), Vector3::new(5.0, -10.0, 0.0));
        assert_eq!(tr.position_at(-1.0), Vector3::zeros());
        assert_eq!(tr.position_at(99.0), Vector3::new(10.0, -20.0, 0.0));
    }

    #[test]
    fn rejects_time_reversal() {
        let p = TrajectoryPoint { t_s: 1.0, x_m: 0.0, y_m: 0.0, z_m: 0.0 };
        assert!(matches!(Trajectory::new(vec![p, p]), Err(TrajectoryError::NonMonotonic { index: 1 })));
        assert!(matches!(Trajectory::new(vec![]), Err(TrajectoryError::Empty)));
    }

    #[test]
    fn csv_round_trip() {
        let tr = Trajectory::stationary(Vector3::new(1.0, 2.0, 3.0), 0.0, 5.0);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        assert_eq!(Trajectory::read_csv(buf.as_slice()).unwrap(), tr);
        let bad = "t_s,x_m,y_m,z_m\n0,1,2,3\n1,x,2,3\n";
        assert!(matches!(Trajectory::read_csv(bad.as_bytes()), Err(TrajectoryError::Csv { line: 3, .. })));
    }

    #[test]
    fn square_route_closes() {
        let route = Route {
            origin: Geodetic::from_degrees(-27.47, 153.02, 10.0),
            segments: [0.0, 90.0, 180.0, 270.0]
                .iter()
                .map(|h| RouteSegment { heading_deg: *h, speed_kmh: 36.0, duration_s: 60.0 })
                .collect(),
        };
        let tr = route.trajectory(240.0, 5.0).unwrap();
        let start = tr.position_at(0.0);
        assert!((tr.position_at(240.0) - start).norm() < 1e-6);
        assert!(((tr.position_at(60.0) - start).norm() - 600.0).abs() < 1e-3);
        assert_eq!(route.segment_at(61.0), 1);
        assert_eq!(route.segment_at(250.0), 0);
        assert_eq!(route.heading_changes(130.0).len(), 3);
    }
}
