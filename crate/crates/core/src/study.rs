//! Vanishing-radius study: coupled runs at decreasing disc radii compared
//! against a disc-free baseline and the fluid particle it carries.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ConfigMap;
use crate::error::{invalid, Error, Result};
use crate::grid::{read_snapshot, wrap_delta, write_snapshot, GridSpec, RegionMask, VectorField2};
use crate::interp::SplineInterpolator;
use crate::rigid::{rate_fit, RateFit, MIN_RADIUS_CELLS};
use crate::solver::{energy_check, run_with, SimConfig, Solver};
use crate::spectral::{norm, Norm};
use crate::tracer::{rk4_step_between, trajectory_distance, Trajectory};

/// Relative change under eta halving above which a record is attributed to the floor.
pub const CONTROL_CHANGE: f64 = 0.3;
/// Records within this factor of the floor estimate are flagged.
pub const FLOOR_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Shared run parameters; the disc radius is ignored.
    pub base: SimConfig,
    pub radii: Vec<f64>,
    pub exclusion_s: f64,
    /// Number of equal time intervals for the velocity-error integral.
    pub samples: usize,
    pub control_runs: bool,
    /// Prefix for `<prefix>.csv`, `<prefix>.json` and the baseline cache.
    pub report_path: Option<PathBuf>,
    pub config_hash: String,
}

impl StudyConfig {
    pub fn from_map(map: &ConfigMap, out_dir: Option<&Path>) -> Result<Self> {
        let base = map.sim_config()?;
        let radii = map.list("radii")?;
        let exclusion_s = match map.auto_f64("exclusion_s")? {
            Some(s) => s,
            None => 2.0 * radii.iter().cloned().fold(0.0, f64::max),
        };
        Ok(Self {
            base,
            radii,
            exclusion_s,
            samples: map.usize("samples")?,
            control_runs: map.bool("control_runs")?,
            report_path: out_dir.map(|d| d.join(map.get("report_path"))),
            config_hash: map.hash(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.base.grid;
        if self.radii.is_empty() {
            return invalid("study needs at least one radius");
        }
        if self.radii.windows(2).any(|w| w[1] >= w[0]) || self.radii.iter().any(|&r| !(r > 0.0)) {
            return invalid("radii must be positive and strictly decreasing");
        }
        let rmin = *self.radii.last().unwrap_or(&0.0);
        if rmin < MIN_RADIUS_CELLS * g.dx() {
            return Err(Error::UnderResolved(format!("smallest radius {rmin} is below {MIN_RADIUS_CELLS} cells")));
        }
        if self.exclusion_s < 2.0 * self.radii[0] {
            return invalid(format!("exclusion_s = {} must be at least twice the largest radius", self.exclusion_s));
        }
        if self.samples < 2 {
            return invalid("samples must be at least 2");
        }
        Ok(())
    }
}

/// Error metrics of one run against the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunMetrics {
    pub traj_sup_err: f64,
    pub traj_l2_err: f64,
    pub vel_err: f64,
    /// `|E(T) - E(0) + int D dt| / E(0)` for the total energy.
    pub energy_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRecord {
    pub r: f64,
    pub metrics: Option<RunMetrics>,
    /// Same run with halved penalization time (and step).
    pub control: Option<RunMetrics>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineInfo {
    pub config_hash: String,
    pub steps: usize,
    pub dt: f64,
    pub arc_length: f64,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config_hash: String,
    pub t_end: f64,
    pub dt: f64,
    pub eta: f64,
    pub exclusion_s: f64,
    /// Sorted by decreasing radius.
    pub records: Vec<StudyRecord>,
    pub baseline: BaselineInfo,
    pub fit: Option<FitSummary>,
}

/// Slopes and floor diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub traj_sup: Option<RateFit>,
    pub traj_l2: Option<RateFit>,
    pub vel: Option<RateFit>,
    /// Largest change of the trajectory error under eta halving.
    pub floor_estimate: f64,
    /// Per record (same order as the report): true when attributed to the floor.
    pub below_floor: Vec<bool>,
}

/// Flag floor-dominated records and fit slopes over the rest.
pub fn fit_report(report: &StudyReport) -> Result<FitSummary> {
    let ok: Vec<(f64, RunMetrics, Option<RunMetrics>)> =
        report.records.iter().filter_map(|r| r.metrics.map(|m| (r.r, m, r.control))).collect();
    if ok.len() < 3 {
        return invalid(format!("fit needs at least 3 successful records, got {}", ok.len()));
    }
    let floor_estimate = ok
        .iter()
        .filter_map(|(_, m, c)| c.map(|c| (m.traj_sup_err - c.traj_sup_err).abs()))
        .fold(0.0, f64::max);
    let flag = |m: &RunMetrics, c: &Option<RunMetrics>| -> bool {
        let changed = c.is_some_and(|c| (m.traj_sup_err - c.traj_sup_err).abs() > CONTROL_CHANGE * m.traj_sup_err);
        changed || m.traj_sup_err < FLOOR_FACTOR * floor_estimate
    };
    let below_floor: Vec<bool> = report
        .records
        .iter()
        .map(|r| match r.metrics {
            Some(m) => flag(&m, &r.control),
            None => true,
        })
        .collect();
    let above: Vec<&(f64, RunMetrics, Option<RunMetrics>)> = ok.iter().filter(|(_, m, c)| !flag(m, c)).collect();
    let fit = |f: &dyn Fn(&RunMetrics) -> f64| -> Option<RateFit> {
        let s: Vec<(f64, f64)> = above.iter().map(|(r, m, _)| (*r, f(m))).collect();
        rate_fit(&s).ok()
    };
    Ok(FitSummary {
        traj_sup: fit(&|m| m.traj_sup_err),
        traj_l2: fit(&|m| m.traj_l2_err),
        vel: fit(&|m| m.vel_err),
        floor_estimate,
        below_floor,
    })
}

/// Baseline data on the sample grid.
struct Baseline {
    tracer: Trajectory,
    fields: Vec<VectorField2>,
    cached: bool,
}

struct Schedule {
    dt: f64,
    steps: usize,
    eta: f64,
}

fn schedule(cfg: &StudyConfig) -> Result<(Schedule, f64)> {
    let mut probe = cfg.base.clone();
    probe.disc_radius = cfg.radii[0];
    let u0 = probe.initial_field()?;
    let p = probe.resolve(&u0)?;
    let per = (p.t_end / (p.dt * cfg.samples as f64) - 1e-9).ceil().max(1.0) as usize;
    let steps = per * cfg.samples;
    Ok((Schedule { dt: p.t_end / steps as f64, steps, eta: p.eta }, p.t_end))
}

fn member_config(cfg: &StudyConfig, s: &Schedule, t_end: f64, r: f64, refine: usize) -> SimConfig {
    let mut c = cfg.base.clone();
    c.disc_radius = r;
    c.eta_penal = Some(s.eta / refine as f64);
    c.dt = Some(s.dt / refine as f64);
    c.t_end = Some(t_end);
    c.snapshot_stride = 0;
    c
}

fn cache_dir(cfg: &StudyConfig) -> Option<PathBuf> {
    cfg.report_path.as_ref().map(|p| {
        let mut s = p.as_os_str().to_owned();
        s.push(format!("_baseline_{}", &cfg.config_hash[..16.min(cfg.config_hash.len())]));
        PathBuf::from(s)
    })
}

fn load_baseline(dir: &Path, samples: usize, hash: &str) -> Option<Baseline> {
    let text = std::fs::read_to_string(dir.join("tracer.csv")).ok()?;
    if !text.lines().next()?.contains(hash) {
        return None;
    }
    let (mut times, mut points) = (Vec::new(), Vec::new());
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().ok()).collect::<Option<Vec<f64>>>()?;
        times.push(v[0]);
        points.push([v[1], v[2]]);
    }
    let mut fields = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        fields.push(read_snapshot(&dir.join(format!("sample_{k:04}.fds"))).ok()?.0);
    }
    Some(Baseline { tracer: Trajectory::new(times, points, hash).ok()?, fields, cached: true })
}

/// Disc-free run with the fluid particle started at `cfg.h0`, advected in
/// lock step with the solver. `observe` also sees each solver state.
pub fn run_with_tracer(cfg: &SimConfig, mut observe: impl FnMut(&Solver) -> Result<()>) -> Result<Trajectory> {
    let mut c = cfg.clone();
    c.disc_radius = 0.0;
    let mut times = Vec::new();
    let mut points = Vec::new();
    let mut prev: Option<SplineInterpolator> = None;
    let mut x = cfg.h0;
    run_with(&c, |sol: &Solver| {
        let interp = SplineInterpolator::new(&sol.velocity());
        if let Some(p) = &prev {
            x = rk4_step_between(p, &interp, x, sol.params().dt)?;
        }
        times.push(sol.time());
        points.push(x);
        prev = Some(interp);
        observe(sol)
    })?;
    Trajectory::new(times, points, "")
}

fn run_baseline(cfg: &StudyConfig, s: &Schedule, t_end: f64) -> Result<Baseline> {
    let dir = cache_dir(cfg);
    if let Some(b) = dir.as_ref().and_then(|d| load_baseline(d, cfg.samples, &cfg.config_hash)) {
        return Ok(b);
    }
    let mut c = member_config(cfg, s, t_end, 0.0, 1);
    c.eta_penal = None;
    let stride = s.steps / cfg.samples;
    let mut fields = Vec::with_capacity(cfg.samples + 1);
    let mut tracer = run_with_tracer(&c, |sol| {
        if sol.steps_taken() % stride == 0 {
            fields.push(sol.velocity());
        }
        Ok(())
    })?;
    tracer.provenance = cfg.config_hash.clone();
    if let Some(d) = dir {
        std::fs::create_dir_all(&d)?;
        tracer.write_csv(&d.join("tracer.csv"), &format!("config_hash={}", cfg.config_hash))?;
        for (k, f) in fields.iter().enumerate() {
            write_snapshot(&d.join(format!("sample_{k:04}.fds")), f, k as f64 * t_end / cfg.samples as f64)?;
        }
    }
    Ok(Baseline { tracer, fields, cached: false })
}

/// Body-frame velocity difference `U_r(y + h_r) - U(y + h)` in the H1 norm over
/// `|y| > s` with margins around both centres removed.
pub fn body_frame_error(ur: &VectorField2, hr: [f64; 2], u: &VectorField2, h: [f64; 2], s: f64) -> Result<f64> {
    let g: GridSpec = u.grid;
    let (ir, ib) = (SplineInterpolator::new(ur), SplineInterpolator::new(u));
    let half = 0.5 * g.box_len;
    let off = [wrap_delta(h[0] - hr[0], g.box_len), wrap_delta(h[1] - hr[1], g.box_len)];
    let mut diff = VectorField2::zeros(g);
    let mut mask = RegionMask::full(g);
    for i in 0..g.n {
        for j in 0..g.n {
            let x = g.node(i, j);
            let y = [x[0] - half, x[1] - half];
            let a = ir.eval([y[0] + hr[0], y[1] + hr[1]]);
            let b = ib.eval([y[0] + h[0], y[1] + h[1]]);
            let k = g.index(i, j);
            diff.data[0][k] = a[0] - b[0];
            diff.data[1][k] = a[1] - b[1];
            let near = |c: [f64; 2]| g.distance(c, y) <= s;
            if near([0.0, 0.0]) || near(off) || near([-off[0], -off[1]]) {
                mask.weights[k] = 0.0;
            }
        }
    }
    norm(&diff, &mask, Norm::H1)
}

fn run_member(cfg: &StudyConfig, s: &Schedule, t_end: f64, r: f64, refine: usize, base: &Baseline) -> Result<RunMetrics> {
    let c = member_config(cfg, s, t_end, r, refine);
    let stride = refine * s.steps / cfg.samples;
    let mut errs = Vec::with_capacity(cfg.samples + 1);
    let out = run_with(&c, |sol: &Solver| {
        if sol.steps_taken().is_multiple_of(stride) {
            let k = sol.steps_taken() / stride;
            let h = base.tracer.at(sol.time());
            errs.push(body_frame_error(&sol.velocity(), sol.body().h, &base.fields[k], h, cfg.exclusion_s)?);
        }
        Ok(())
    })?;
    let times: Vec<f64> = out.records.iter().map(|r| r.diag.time).collect();
    let hs: Vec<[f64; 2]> = out.records.iter().map(|r| r.h).collect();
    let traj = Trajectory::new(times, hs, cfg.config_hash.clone())?;
    let dist = trajectory_distance(&traj, &base.tracer)?;
    let w = t_end / cfg.samples as f64;
    let vel2: f64 = errs.iter().enumerate().map(|(k, e)| if k == 0 || k == cfg.samples { 0.5 } else { 1.0 } * w * e * e).sum();
    let diags = out.diagnostics();
    let e0 = diags[0].total_energy();
    let mut budget = diags.last().map(|d| d.total_energy()).unwrap_or(e0) - e0;
    for p in diags.windows(2) {
        budget += 0.5 * (p[1].time - p[0].time) * (p[0].dissipation() + p[1].dissipation());
    }
    let _ = energy_check(&diags);
    Ok(RunMetrics {
        traj_sup_err: dist.sup,
        traj_l2_err: dist.l2,
        vel_err: vel2.sqrt(),
        energy_drift: if e0 > 0.0 { budget.abs() / e0 } else { budget.abs() },
    })
}

/// Run the baseline, every radius and (optionally) its control, then fit.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    run_study_with_progress(cfg, |_| {})
}

pub fn run_study_with_progress(cfg: &StudyConfig, mut progress: impl FnMut(&str)) -> Result<StudyReport> {
    cfg.validate()?;
    let (sched, t_end) = schedule(cfg)?;
    progress(&format!("baseline: {} steps of {:.3e}", sched.steps, sched.dt));
    let base = run_baseline(cfg, &sched, t_end)?;
    let mut records = Vec::with_capacity(cfg.radii.len());
    for &r in &cfg.radii {
        progress(&format!("radius {r}"));
        let rec = match run_member(cfg, &sched, t_end, r, 1, &base) {
            Ok(m) => {
                let control = if cfg.control_runs {
                    progress(&format!("radius {r} control"));
                    match run_member(cfg, &sched, t_end, r, 2, &base) {
                        Ok(c) => Some(c),
                        Err(e) => {
                            records.push(StudyRecord { r, metrics: Some(m), control: None, failure: Some(format!("control: {e}")) });
                            continue;
                        }
                    }
                } else {
                    None
                };
                StudyRecord { r, metrics: Some(m), control, failure: None }
            }
            Err(e) => StudyRecord { r, metrics: None, control: None, failure: Some(e.to_string()) },
        };
        records.push(rec);
    }
    let mut report = StudyReport {
        config_hash: cfg.config_hash.clone(),
        t_end,
        dt: sched.dt,
        eta: sched.eta,
        exclusion_s: cfg.exclusion_s,
        records,
        baseline: BaselineInfo {
            config_hash: cfg.config_hash.clone(),
            steps: sched.steps,
            dt: sched.dt,
            arc_length: base.tracer.arc_length(),
            cached: base.cached,
        },
        fit: None,
    };
    report.fit = fit_report(&report).ok();
    if let Some(p) = &cfg.report_path {
        write_report(&report, p)?;
    }
    Ok(report)
}

/// Write `<prefix>.csv` and `<prefix>.json`.
pub fn write_report(report: &StudyReport, prefix: &Path) -> Result<()> {
    if let Some(d) = prefix.parent() {
        if !d.as_os_str().is_empty() {
            std::fs::create_dir_all(d)?;
        }
    }
    let mut csv = format!("# config_hash={}\n", report.config_hash);
    csv.push_str("r,traj_sup_err,traj_L2_err,vel_err_H1_Omega_s,energy_drift,control_traj_sup_err,control_vel_err,below_floor,failure\n");
    let flags = report.fit.as_ref().map(|f| f.below_floor.clone()).unwrap_or_default();
    for (i, r) in report.records.iter().enumerate() {
        let m = |f: &dyn Fn(&RunMetrics) -> f64, x: &Option<RunMetrics>| x.map(|m| format!("{:.10e}", f(&m))).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.r,
            m(&|m| m.traj_sup_err, &r.metrics),
            m(&|m| m.traj_l2_err, &r.metrics),
            m(&|m| m.vel_err, &r.metrics),
            m(&|m| m.energy_drift, &r.metrics),
            m(&|m| m.traj_sup_err, &r.control),
            m(&|m| m.vel_err, &r.control),
            flags.get(i).copied().unwrap_or(false),
            r.failure.clone().unwrap_or_default().replace(',', ";"),
        ));
    }
    let with_ext = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    std::fs::write(with_ext(".csv"), csv)?;
    let slopes = report.fit.as_ref().map(|f| {
        serde_json::json!({
            "traj_sup_err": f.traj_sup.map(|x| x.slope),
            "traj_L2_err": f.traj_l2.map(|x| x.slope),
            "vel_err_H1_Omega_s": f.vel.map(|x| x.slope),
        })
    });
    let json = serde_json::json!({
        "config_hash": report.config_hash,
        "slopes": slopes,
        "floor": report.fit.as_ref().map(|f| serde_json::json!({
            "estimate": f.floor_estimate,
            "below_floor": f.below_floor,
        })),
        "report": report,
    });
    std::fs::write(with_ext(".json"), serde_json::to_string_pretty(&json)?)?;
    Ok(())
}
