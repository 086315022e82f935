//! Passive fluid-particle trajectories.

use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::grid::{read_snapshot, VectorField2};
use crate::interp::SplineInterpolator;

/// Time-stamped positions. Positions are kept unwrapped (continuous across
/// the periodic boundary).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub provenance: String,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, points: Vec<[f64; 2]>, provenance: impl Into<String>) -> Result<Self> {
        if times.len() != points.len() || times.is_empty() {
            return invalid("trajectory needs matching, non-empty time and point lists");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("trajectory times must be strictly increasing");
        }
        Ok(Self { times, points, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Piecewise-linear position at `t` (clamped to the time range).
    pub fn at(&self, t: f64) -> [f64; 2] {
        let ts = &self.times;
        if t <= ts[0] {
            return self.points[0];
        }
        if t >= self.end() {
            return self.points[ts.len() - 1];
        }
        let i = ts.partition_point(|&s| s <= t) - 1;
        let a = (t - ts[i]) / (ts[i + 1] - ts[i]);
        let (p, q) = (self.points[i], self.points[i + 1]);
        [p[0] + a * (q[0] - p[0]), p[1] + a * (q[1] - p[1])]
    }

    /// Arc length of the polyline.
    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
    }

    pub fn write_csv(&self, path: &Path, header_comment: &str) -> Result<()> {
        let mut s = String::new();
        for line in header_comment.lines() {
            s.push_str(&format!("# {line}\n"));
        }
        s.push_str("t,x,y\n");
        for (t, p) in self.times.iter().zip(&self.points) {
            s.push_str(&format!("{t:.17e},{:.17e},{:.17e}\n", p[0], p[1]));
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Source of velocity fields in time.
pub trait VelocityProvider {
    fn velocity(&self, x: [f64; 2], t: f64) -> Result<[f64; 2]>;
    fn time_range(&self) -> (f64, f64);
}

/// Time-independent field.
pub struct SteadyField {
    interp: SplineInterpolator,
}

impl SteadyField {
    pub fn new(u: &VectorField2) -> Self {
        Self { interp: SplineInterpolator::new(u) }
    }
}

impl VelocityProvider for SteadyField {
    fn velocity(&self, x: [f64; 2], _t: f64) -> Result<[f64; 2]> {
        Ok(self.interp.eval(x))
    }

    fn time_range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Snapshots linearly interpolated in time.
pub struct SnapshotSeries {
    times: Vec<f64>,
    fields: Vec<SplineInterpolator>,
}

impl SnapshotSeries {
    pub fn new(snapshots: Vec<(f64, VectorField2)>) -> Result<Self> {
        if snapshots.is_empty() {
            return invalid("snapshot series is empty");
        }
        if snapshots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return invalid("snapshot times must be strictly increasing");
        }
        let grid = snapshots[0].1.grid;
        if snapshots.iter().any(|s| s.1.grid != grid) {
            return invalid("snapshots must share a grid");
        }
        let times = snapshots.iter().map(|s| s.0).collect();
        let fields = snapshots.iter().map(|s| SplineInterpolator::new(&s.1)).collect();
        Ok(Self { times, fields })
    }

    /// Load every `*.fds` file in a directory, ordered by simulation time.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "fds"))
            .collect();
        paths.sort();
        let mut snaps = Vec::with_capacity(paths.len());
        for p in &paths {
            let (u, t) = read_snapshot(p)?;
            snaps.push((t, u));
        }
        snaps.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::new(snaps)
    }
}

impl VelocityProvider for SnapshotSeries {
    fn velocity(&self, x: [f64; 2], t: f64) -> Result<[f64; 2]> {
        let ts = &self.times;
        let span = ts[ts.len() - 1] - ts[0];
        let tol = 1e-9 * span.max(1.0);
        if t < ts[0] - tol || t > ts[ts.len() - 1] + tol {
            return Err(Error::InvalidParameter(format!("no velocity data at t = {t}")));
        }
        if ts.len() == 1 {
            return Ok(self.fields[0].eval(x));
        }
        let i = (ts.partition_point(|&s| s <= t).max(1) - 1).min(ts.len() - 2);
        let a = ((t - ts[i]) / (ts[i + 1] - ts[i])).clamp(0.0, 1.0);
        let (p, q) = (self.fields[i].eval(x), self.fields[i + 1].eval(x));
        Ok([(1.0 - a) * p[0] + a * q[0], (1.0 - a) * p[1] + a * q[1]])
    }

    fn time_range(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }
}

fn checked(v: [f64; 2], t: f64) -> Result<[f64; 2]> {
    if v[0].is_finite() && v[1].is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("tracer velocity at t = {t}")))
    }
}

/// Classical Runge-Kutta step.
pub fn rk4_step(f: &impl Fn([f64; 2], f64) -> Result<[f64; 2]>, x: [f64; 2], t: f64, dt: f64) -> Result<[f64; 2]> {
    let k1 = checked(f(x, t)?, t)?;
    let k2 = checked(f([x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]], t + 0.5 * dt)?, t)?;
    let k3 = checked(f([x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]], t + 0.5 * dt)?, t)?;
    let k4 = checked(f([x[0] + dt * k3[0], x[1] + dt * k3[1]], t + dt)?, t)?;
    Ok([
        x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

/// RK4 step between two fields at `t` and `t + dt`, linear in time between them.
pub fn rk4_step_between(a: &SplineInterpolator, b: &SplineInterpolator, x: [f64; 2], dt: f64) -> Result<[f64; 2]> {
    let f = |p: [f64; 2], s: f64| -> Result<[f64; 2]> {
        let w = s / dt;
        let (u, v) = (a.eval(p), b.eval(p));
        Ok([(1.0 - w) * u[0] + w * v[0], (1.0 - w) * u[1] + w * v[1]])
    };
    rk4_step(&f, x, 0.0, dt)
}

/// Integrate `dx/dt = u(x, t)` from `x0` at the provider's start time (or 0).
pub fn advect(provider: &impl VelocityProvider, x0: [f64; 2], dt: f64, t_end: f64) -> Result<Trajectory> {
    advect_from(provider, x0, 0.0, dt, t_end)
}

pub fn advect_from(provider: &impl VelocityProvider, x0: [f64; 2], t0: f64, dt: f64, t_end: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end >= t0) {
        return invalid(format!("bad tracer interval: dt = {dt}, [{t0}, {t_end}]"));
    }
    let (lo, hi) = provider.time_range();
    let tol = 1e-9 * (t_end - t0).max(1.0);
    if t0 < lo - tol || t_end > hi + tol {
        return Err(Error::InvalidParameter(format!("provider covers [{lo}, {hi}], need [{t0}, {t_end}]")));
    }
    let steps = ((t_end - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps > 0 { (t_end - t0) / steps as f64 } else { dt };
    let mut times = vec![t0];
    let mut points = vec![x0];
    let mut x = x0;
    let f = |p: [f64; 2], s: f64| provider.velocity(p, s);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        x = rk4_step(&f, x, t, h)?;
        times.push(t0 + (k + 1) as f64 * h);
        points.push(x);
    }
    Trajectory::new(times, points, "")
}

/// Sup and L2-in-time distances between trajectories.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TrajectoryDistance {
    pub sup: f64,
    pub l2: f64,
}

/// Distances over the common time range, on the union of both time grids.
pub fn trajectory_distance(a: &Trajectory, b: &Trajectory) -> Result<TrajectoryDistance> {
    let lo = a.start().max(b.start());
    let hi = a.end().min(b.end());
    if hi < lo {
        return invalid("trajectories have disjoint time ranges");
    }
    let mut ts: Vec<f64> = a.times.iter().chain(&b.times).cloned().filter(|&t| t >= lo && t <= hi).collect();
    ts.push(lo);
    ts.push(hi);
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + y.abs()));
    let dist = |t: f64| {
        let (p, q) = (a.at(t), b.at(t));
        (p[0] - q[0]).hypot(p[1] - q[1])
    };
    let ds: Vec<f64> = ts.iter().map(|&t| dist(t)).collect();
    let sup = ds.iter().cloned().fold(0.0, f64::max);
    let mut l2 = 0.0;
    for i in 1..ts.len() {
        l2 += 0.5 * (ts[i] - ts[i - 1]) * (ds[i] * ds[i] + ds[i - 1] * ds[i - 1]);
    }
    Ok(TrajectoryDistance { sup, l2: l2.sqrt() })
}
