//! Coupled fluid/disc time stepper.
//!
//! The fluid obeys `du/dt = -P[(u.grad)u] + nu lap u - P[(chi/eta)(u - hdot)]`
//! on the periodic box and the disc translates without rotating. The penalized
//! fluid already carries the disc's inertia, so a neutrally buoyant disc has
//! no excess mass and the body equation reduces to `int chi (u - hdot) = 0`:
//! `hdot` is the `chi`-weighted mean of `u`, evaluated inside every stage.
//! With `disc_radius = 0` the mean becomes point evaluation and the body is a
//! fluid particle. Viscosity is handled by an exact integrating factor, the
//! rest by Heun's method. All right-hand-side terms are truncated to the
//! dealiased band, so fluid momentum is conserved exactly and the energy budget
//! closes up to time-stepping error.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{write_snapshot, GridSpec, RegionMask, ScalarField, VectorField2};
use crate::initial::{make_initial_field, InitialField};
use crate::interp::interpolate;
use crate::rigid::MIN_RADIUS_CELLS;
use crate::spectral::{dealias_mask, forward_pair, forward_vector, inverse_pair, inverse_real, leray_project, norm, Norm};

/// Speed-times-step over cell size above which a run is aborted.
pub const CFL_ABORT: f64 = 1.0;

/// How the body velocity is advanced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Coupling {
    /// Body velocity re-evaluated inside each Runge-Kutta stage.
    Rk2,
    /// Fluid step with the body frozen at its start-of-step state, then a
    /// trapezoidal position update from the new fluid velocity.
    SemiImplicit,
}

/// All physical and numerical parameters of one run. `None` means "derive a default".
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub nu: f64,
    pub disc_radius: f64,
    pub rho: f64,
    pub eta_penal: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub mask_width: Option<f64>,
    pub ic: InitialField,
    pub h0: [f64; 2],
    pub hdot0: Option<[f64; 2]>,
    pub coupling: Coupling,
    pub snapshot_stride: usize,
}

impl SimConfig {
    pub fn new(grid: GridSpec, ic: InitialField) -> Self {
        Self {
            grid,
            nu: 1e-3,
            disc_radius: 0.0,
            rho: 1.0,
            eta_penal: None,
            dt: None,
            t_end: None,
            mask_width: None,
            ic,
            h0: [0.0, 0.0],
            hdot0: None,
            coupling: Coupling::Rk2,
            snapshot_stride: 0,
        }
    }

    /// Initial field with any rigidified block centred on the disc.
    pub fn initial_field(&self) -> Result<VectorField2> {
        let ic = match &self.ic {
            InitialField::Rigidified { base, radius, velocity, .. } => InitialField::Rigidified {
                base: base.clone(),
                radius: *radius,
                centre: self.h0,
                velocity: self.hdot0.or(*velocity),
            },
            other => other.clone(),
        };
        leray_project(&make_initial_field(&self.grid, &ic)?)
    }

    /// Fill in defaults from the initial field and check all invariants.
    pub fn resolve(&self, u0: &VectorField2) -> Result<Resolved> {
        let g = self.grid;
        if u0.grid != g {
            return invalid("initial field grid does not match config grid");
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return invalid(format!("nu must be non-negative, got {}", self.nu));
        }
        if self.rho != 1.0 {
            return invalid(format!("only a neutrally buoyant body (rho = 1) is supported, got {}", self.rho));
        }
        let r = self.disc_radius;
        if r < 0.0 || !r.is_finite() {
            return invalid(format!("disc radius must be non-negative, got {r}"));
        }
        if r > 0.0 && r < MIN_RADIUS_CELLS * g.dx() {
            return Err(Error::UnderResolved(format!("disc radius {r} is below {MIN_RADIUS_CELLS} cells")));
        }
        if r > 0.2 * g.box_len {
            return invalid(format!("disc radius {r} exceeds 0.2 L"));
        }
        let umax = u0.max_abs();
        let eta = match self.eta_penal {
            Some(e) if e > 0.0 => e,
            Some(e) => return invalid(format!("eta_penal must be positive, got {e}")),
            None => 1e-3 * g.box_len / umax.max(1e-12),
        };
        let mask_width = self.mask_width.unwrap_or(2.0 * g.dx());
        if r > 0.0 && !(mask_width > 0.0 && mask_width <= r) {
            return invalid(format!("mask width {mask_width} must lie in (0, r = {r}]"));
        }
        let cfl_dt = if umax > 0.0 { 0.4 * g.dx() / umax } else { f64::INFINITY };
        let eta_dt = if r > 0.0 { 0.5 * eta } else { f64::INFINITY };
        let dt_max = cfl_dt.min(eta_dt);
        let dt = match self.dt {
            Some(d) if d > 0.0 => {
                if d > dt_max * (1.0 + 1e-12) {
                    return invalid(format!("dt = {d} exceeds the stability limit {dt_max:.6e}"));
                }
                d
            }
            Some(d) => return invalid(format!("dt must be positive, got {d}")),
            None => dt_max.min(0.4 * g.dx()),
        };
        let t_end = match self.t_end {
            Some(t) if t >= 0.0 => t,
            Some(t) => return invalid(format!("t_end must be non-negative, got {t}")),
            None => default_horizon(u0)?,
        };
        let steps = if t_end > 0.0 { ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize } else { 0 };
        let dt = if steps > 0 { t_end / steps as f64 } else { dt };
        let hdot0 = match self.hdot0 {
            Some(v) => v,
            None => interpolate(u0, self.h0),
        };
        Ok(Resolved { eta, dt, t_end, steps, mask_width, hdot0 })
    }
}

/// Horizon heuristic `1 / [(1 + |u0|^4)(1 + |u0|_{H1}^2)^2]`.
pub fn default_horizon(u0: &VectorField2) -> Result<f64> {
    let full = RegionMask::full(u0.grid);
    let l2 = norm(u0, &full, Norm::L2)?;
    let h1 = norm(u0, &full, Norm::H1)?;
    Ok(1.0 / ((1.0 + l2.powi(4)) * (1.0 + h1 * h1).powi(2)))
}

/// Parameters after defaults are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub eta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub mask_width: f64,
    pub hdot0: [f64; 2],
}

/// Disc state. Rotation is frozen at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub h: [f64; 2],
    pub hdot: [f64; 2],
    pub mass: f64,
    pub inertia: f64,
    pub omega: f64,
}

impl BodyState {
    pub fn new(h: [f64; 2], hdot: [f64; 2], radius: f64, rho: f64) -> Self {
        let mass = rho * PI * radius * radius;
        Self { h, hdot, mass, inertia: 0.5 * mass * radius * radius, omega: 0.0 }
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * (self.hdot[0].powi(2) + self.hdot[1].powi(2))
    }
}

/// Per-step diagnostics of the state at `time`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StepDiagnostics {
    pub time: f64,
    /// `1/2 int |u|^2` over the box.
    pub kinetic_energy: f64,
    /// `1/2 (M - rho_f int chi) |hdot|^2`, the body energy not already carried
    /// by the fluid. Zero for a neutrally buoyant disc.
    pub body_energy: f64,
    /// `nu int |grad u|^2`, equal to `2 nu int |D(u)|^2` for periodic divergence-free fields.
    pub viscous_dissipation: f64,
    /// `(1/eta) int chi |u - hdot|^2`.
    pub penal_dissipation: f64,
    pub penal_force: [f64; 2],
    pub cfl: f64,
}

impl StepDiagnostics {
    pub fn total_energy(&self) -> f64 {
        self.kinetic_energy + self.body_energy
    }

    pub fn dissipation(&self) -> f64 {
        self.viscous_dissipation + self.penal_dissipation
    }
}

/// Smoothed disc indicator: 1 inside `r - w`, 0 outside `r + w`, sine ramp between.
#[inline]
pub fn chi_profile(rho: f64, r: f64, w: f64) -> f64 {
    if r <= 0.0 || rho >= r + w {
        0.0
    } else if rho <= r - w {
        1.0
    } else {
        0.5 * (1.0 - (0.5 * PI * (rho - r) / w).sin())
    }
}

/// Indicator field of a disc of radius `r` centred at `h`.
pub fn chi_mask(grid: &GridSpec, h: [f64; 2], r: f64, w: f64) -> ScalarField {
    let mut out = ScalarField::zeros(*grid);
    for_each_in_disc(grid, h, r, w, |k, _, chi| out.data[k] = chi);
    out
}

/// Visit nodes with nonzero indicator as `(index, displacement from h, chi)`.
fn for_each_in_disc(grid: &GridSpec, h: [f64; 2], r: f64, w: f64, mut f: impl FnMut(usize, [f64; 2], f64)) {
    if r <= 0.0 {
        return;
    }
    let dx = grid.dx();
    let n = grid.n as i64;
    let reach = r + w;
    let lo = |c: f64| ((c - reach) / dx).floor() as i64;
    let hi = |c: f64| ((c + reach) / dx).ceil() as i64;
    for i in lo(h[0])..=hi(h[0]) {
        let x = i as f64 * dx - h[0];
        for j in lo(h[1])..=hi(h[1]) {
            let y = j as f64 * dx - h[1];
            let chi = chi_profile(x.hypot(y), r, w);
            if chi > 0.0 {
                let k = (i.rem_euclid(n) * n + j.rem_euclid(n)) as usize;
                f(k, [x, y], chi);
            }
        }
    }
}

struct Rhs {
    du: [Vec<Complex64>; 2],
    hdot: [f64; 2],
}

/// Time integrator for one coupled run.
pub struct Solver {
    cfg: SimConfig,
    params: Resolved,
    grid: GridSpec,
    uh: [Vec<Complex64>; 2],
    body: BodyState,
    time: f64,
    steps_taken: usize,
    kx: Vec<f64>,
    ky: Vec<f64>,
    band: Vec<bool>,
    ifac: Vec<f64>,
}

impl Solver {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        let u0 = cfg.initial_field()?;
        Self::with_initial(cfg, &u0)
    }

    pub fn with_initial(cfg: &SimConfig, u0: &VectorField2) -> Result<Self> {
        u0.ensure_finite("initial field")?;
        let params = cfg.resolve(u0)?;
        let g = cfg.grid;
        let band = dealias_mask(&g);
        let mut uh = forward_vector(&leray_project(u0)?);
        for c in 0..2 {
            for (z, keep) in uh[c].iter_mut().zip(&band) {
                if !keep {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
        }
        let (kx, ky) = crate::spectral::wavenumbers(&g);
        let k2: Vec<f64> = kx.iter().zip(&ky).map(|(a, b)| a * a + b * b).collect();
        let ifac = k2.iter().map(|k| (-cfg.nu * k * params.dt).exp()).collect();
        let body = BodyState::new(cfg.h0, params.hdot0, cfg.disc_radius, cfg.rho);
        let mut s = Self { cfg: cfg.clone(), params, grid: g, uh, body, time: 0.0, steps_taken: 0, kx, ky, band, ifac };
        let u = s.velocity();
        s.body.hdot = s.body_velocity(&u.data[0], &u.data[1], cfg.h0);
        Ok(s)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Resolved {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn body(&self) -> &BodyState {
        &self.body
    }

    pub fn is_finished(&self) -> bool {
        self.steps_taken >= self.params.steps
    }

    pub fn velocity(&self) -> VectorField2 {
        let (a, b) = inverse_pair(&self.grid, &self.uh[0], &self.uh[1]);
        VectorField2 { grid: self.grid, data: [a, b] }
    }

    fn has_body(&self) -> bool {
        self.cfg.disc_radius > 0.0
    }

    /// `chi`-weighted mean of `(u, v)` over the disc at `h`, or the
    /// interpolated value at `h` when there is no disc.
    fn body_velocity(&self, u: &[f64], v: &[f64], h: [f64; 2]) -> [f64; 2] {
        if !self.has_body() {
            let f = VectorField2 { grid: self.grid, data: [u.to_vec(), v.to_vec()] };
            return interpolate(&f, h);
        }
        let (mut s, mut w) = ([0.0; 2], 0.0);
        for_each_in_disc(&self.grid, h, self.cfg.disc_radius, self.params.mask_width, |k, _, chi| {
            s[0] += chi * u[k];
            s[1] += chi * v[k];
            w += chi;
        });
        [s[0] / w, s[1] / w]
    }

    /// Right-hand side with the body at `h`; the body velocity is frozen to
    /// `frozen` if given, otherwise taken from the closure.
    fn rhs(&self, uh: &[Vec<Complex64>; 2], h: [f64; 2], frozen: Option<[f64; 2]>) -> Result<Rhs> {
        let g = &self.grid;
        let (u, v) = inverse_pair(g, &uh[0], &uh[1]);
        let hdot = frozen.unwrap_or_else(|| self.body_velocity(&u, &v, h));
        let i = Complex64::new(0.0, 1.0);
        let wh: Vec<Complex64> = (0..g.len()).map(|k| i * (self.kx[k] * uh[1][k] - self.ky[k] * uh[0][k])).collect();
        let w = inverse_real(g, &wh);
        let mut fx: Vec<f64> = w.iter().zip(&v).map(|(w, v)| w * v).collect();
        let mut fy: Vec<f64> = w.iter().zip(&u).map(|(w, u)| -w * u).collect();
        if self.has_body() {
            let inv_eta = 1.0 / self.params.eta;
            for_each_in_disc(g, h, self.cfg.disc_radius, self.params.mask_width, |k, _, chi| {
                fx[k] -= chi * inv_eta * (u[k] - hdot[0]);
                fy[k] -= chi * inv_eta * (v[k] - hdot[1]);
            });
        }
        let (mut ax, mut ay) = forward_pair(g, &fx, &fy);
        for k in 0..g.len() {
            if !self.band[k] {
                ax[k] = Complex64::new(0.0, 0.0);
                ay[k] = Complex64::new(0.0, 0.0);
                continue;
            }
            let k2 = self.kx[k] * self.kx[k] + self.ky[k] * self.ky[k];
            if k2 > 0.0 {
                let d = (ax[k] * self.kx[k] + ay[k] * self.ky[k]) / k2;
                ax[k] -= d * self.kx[k];
                ay[k] -= d * self.ky[k];
            }
        }
        Ok(Rhs { du: [ax, ay], hdot })
    }

    /// Advance one step and return diagnostics of the new state.
    pub fn step(&mut self) -> Result<StepDiagnostics> {
        let dt = self.params.dt;
        let b = self.body;
        let k1 = self.rhs(&self.uh, b.h, None)?;
        let (h_star, frozen) = match self.cfg.coupling {
            Coupling::Rk2 => ([b.h[0] + dt * k1.hdot[0], b.h[1] + dt * k1.hdot[1]], None),
            Coupling::SemiImplicit => (b.h, Some(k1.hdot)),
        };
        let mut ustar = self.uh.clone();
        for c in 0..2 {
            for k in 0..self.grid.len() {
                ustar[c][k] = self.ifac[k] * (self.uh[c][k] + dt * k1.du[c][k]);
            }
        }
        let k2 = self.rhs(&ustar, h_star, frozen)?;
        for c in 0..2 {
            for k in 0..self.grid.len() {
                let e = self.ifac[k];
                self.uh[c][k] = e * (self.uh[c][k] + 0.5 * dt * k1.du[c][k]) + 0.5 * dt * k2.du[c][k];
            }
        }
        let u = self.velocity();
        let end = match self.cfg.coupling {
            Coupling::Rk2 => k2.hdot,
            Coupling::SemiImplicit => self.body_velocity(&u.data[0], &u.data[1], b.h),
        };
        for a in 0..2 {
            self.body.h[a] = b.h[a] + 0.5 * dt * (k1.hdot[a] + end[a]);
        }
        self.body.hdot = self.body_velocity(&u.data[0], &u.data[1], self.body.h);
        self.steps_taken += 1;
        self.time = self.steps_taken as f64 * dt;
        let d = self.diagnostics()?;
        if d.cfl > CFL_ABORT {
            return Err(Error::Unstable { time: self.time, reason: format!("CFL number {:.3} exceeds {CFL_ABORT}", d.cfl) });
        }
        Ok(d)
    }

    /// Diagnostics of the current state.
    pub fn diagnostics(&self) -> Result<StepDiagnostics> {
        let g = &self.grid;
        let scale = g.area() / (g.len() as f64).powi(2);
        let (mut e, mut visc) = (0.0, 0.0);
        for k in 0..g.len() {
            let m = self.uh[0][k].norm_sqr() + self.uh[1][k].norm_sqr();
            e += m;
            visc += m * (self.kx[k] * self.kx[k] + self.ky[k] * self.ky[k]);
        }
        let u = self.velocity();
        let b = &self.body;
        let (mut force, mut pd) = ([0.0; 2], 0.0);
        if self.has_body() {
            let inv_eta = 1.0 / self.params.eta;
            for_each_in_disc(g, b.h, self.cfg.disc_radius, self.params.mask_width, |k, _, chi| {
                let rx = u.data[0][k] - b.hdot[0];
                let ry = u.data[1][k] - b.hdot[1];
                force[0] += chi * inv_eta * rx;
                force[1] += chi * inv_eta * ry;
                pd += chi * inv_eta * (rx * rx + ry * ry);
            });
        }
        let da = g.cell_area();
        let excess = if self.cfg.rho == 1.0 {
            0.0
        } else {
            (self.cfg.rho - 1.0) * chi_mask(g, b.h, self.cfg.disc_radius, self.params.mask_width).data.iter().sum::<f64>() * da
        };
        let d = StepDiagnostics {
            time: self.time,
            kinetic_energy: 0.5 * e * scale,
            body_energy: 0.5 * excess * (b.hdot[0].powi(2) + b.hdot[1].powi(2)),
            viscous_dissipation: self.cfg.nu * visc * scale,
            penal_dissipation: pd * da,
            penal_force: [force[0] * da, force[1] * da],
            cfl: u.max_abs() * self.params.dt / g.dx(),
        };
        let finite = [d.kinetic_energy, d.viscous_dissipation, d.penal_dissipation, b.h[0], b.h[1], b.hdot[0], b.hdot[1]]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Unstable { time: self.time, reason: "non-finite state".into() });
        }
        debug_assert_eq!(b.omega, 0.0);
        Ok(d)
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub h: [f64; 2],
    pub hdot: [f64; 2],
    pub diag: StepDiagnostics,
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub params: Resolved,
    pub records: Vec<TrajectoryRecord>,
    pub snapshots: Vec<PathBuf>,
    pub final_velocity: VectorField2,
}

impl RunOutput {
    pub fn diagnostics(&self) -> Vec<StepDiagnostics> {
        self.records.iter().map(|r| r.diag).collect()
    }
}

/// Run to `t_end`, calling `observe` after every step (and once at the start).
pub fn run_with(cfg: &SimConfig, mut observe: impl FnMut(&Solver) -> Result<()>) -> Result<RunOutput> {
    let mut s = Solver::new(cfg)?;
    let mut records = Vec::with_capacity(s.params.steps + 1);
    let d0 = s.diagnostics()?;
    records.push(TrajectoryRecord { h: s.body.h, hdot: s.body.hdot, diag: d0 });
    observe(&s)?;
    while !s.is_finished() {
        let d = s.step()?;
        records.push(TrajectoryRecord { h: s.body.h, hdot: s.body.hdot, diag: d });
        observe(&s)?;
    }
    Ok(RunOutput { params: s.params, records, snapshots: Vec::new(), final_velocity: s.velocity() })
}

/// Run to `t_end`, writing FDS1 snapshots into `snapshot_dir` every `snapshot_stride` steps.
pub fn run(cfg: &SimConfig, snapshot_dir: Option<&Path>, tag: &str) -> Result<RunOutput> {
    let mut snaps = Vec::new();
    let stride = cfg.snapshot_stride;
    let mut out = run_with(cfg, |s| {
        if let (Some(dir), true) = (snapshot_dir, stride > 0) {
            if s.steps_taken() % stride == 0 || s.is_finished() {
                let p = dir.join(format!("snap_{tag}_{:07}.fds", s.steps_taken()));
                write_snapshot(&p, &s.velocity(), s.time())?;
                snaps.push(p);
            }
        }
        Ok(())
    })?;
    out.snapshots = snaps;
    Ok(out)
}

/// Energy-budget summary of a diagnostics series.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnergyCheck {
    /// Largest `|dE/dt + D|` with `D` the trapezoidal mean dissipation rate.
    pub max_residual: f64,
    /// Largest signed residual.
    pub max_signed_residual: f64,
    /// Largest per-step energy defect `|dE + dt D|`.
    pub max_step_defect: f64,
    /// Largest per-step increase of the total energy (zero if monotone).
    pub max_increase: f64,
    pub initial_energy: f64,
}

impl EnergyCheck {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.max_increase <= tol * self.initial_energy
    }
}

/// Check the discrete energy identity `dE/dt = -(viscous + penalization dissipation)`
/// on the total (fluid plus body) energy.
pub fn energy_check(series: &[StepDiagnostics]) -> EnergyCheck {
    let e0 = series.first().map(|d| d.total_energy()).unwrap_or(0.0);
    let mut out = EnergyCheck { max_residual: 0.0, max_signed_residual: 0.0, max_step_defect: 0.0, max_increase: 0.0, initial_energy: e0 };
    for w in series.windows(2) {
        let dt = w[1].time - w[0].time;
        if dt <= 0.0 {
            continue;
        }
        let de = w[1].total_energy() - w[0].total_energy();
        let diss = 0.5 * (w[0].dissipation() + w[1].dissipation());
        let res = de / dt + diss;
        if res.abs() > out.max_residual {
            out.max_residual = res.abs();
            out.max_signed_residual = res;
        }
        out.max_step_defect = out.max_step_defect.max((de + dt * diss).abs());
        out.max_increase = out.max_increase.max(de);
    }
    out
}
