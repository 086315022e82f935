//! Initial velocity fields.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField2};
use crate::interp::interpolate;
use crate::spectral::{curl_stream, forward_real, forward_vector, inverse_real, leray_project};

/// Description of an initial velocity field.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialField {
    Zero,
    Uniform([f64; 2]),
    /// `A (sin kx cos ky, -cos kx sin ky)` with `k = 2 pi / L`.
    TaylorGreen { amplitude: f64 },
    /// Periodized Gaussian vortex with circulation `circulation` and core radius `core`.
    LambOseen { circulation: f64, core: f64, centre: [f64; 2] },
    /// `base` modified near `centre` so it moves rigidly with `velocity` on the disc
    /// of radius `radius`. A `None` velocity takes the base value at the centre.
    Rigidified { base: Box<InitialField>, radius: f64, centre: [f64; 2], velocity: Option<[f64; 2]> },
}

impl fmt::Display for InitialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Uniform(c) => write!(f, "uniform({}, {})", c[0], c[1]),
            Self::TaylorGreen { amplitude } => write!(f, "taylor_green({amplitude})"),
            Self::LambOseen { circulation, core, centre } => {
                write!(f, "lamb_oseen({circulation}, {core}, {}, {})", centre[0], centre[1])
            }
            Self::Rigidified { base, radius, .. } => write!(f, "rigidified({base}, {radius})"),
        }
    }
}

impl InitialField {
    /// Parse `zero`, `uniform(a, b)`, `taylor_green[(A)]`, `lamb_oseen(G, a, cx, cy)`
    /// or `rigidified(<base>, R)`. Rigidified centre and velocity are filled by the caller.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(p) => {
                if !s.ends_with(')') {
                    return Err(Error::Config(format!("unbalanced parentheses in `{s}`")));
                }
                (s[..p].trim(), split_args(&s[p + 1..s.len() - 1]))
            }
            None => (s, Vec::new()),
        };
        let nums = |args: &[String], want: usize| -> Result<Vec<f64>> {
            if args.len() != want {
                return Err(Error::Config(format!("`{name}` takes {want} arguments, got {}", args.len())));
            }
            args.iter()
                .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number `{a}` in `{s}`"))))
                .collect()
        };
        match name {
            "zero" => {
                nums(&args, 0)?;
                Ok(Self::Zero)
            }
            "uniform" => {
                let v = nums(&args, 2)?;
                Ok(Self::Uniform([v[0], v[1]]))
            }
            "taylor_green" => {
                let amplitude = if args.is_empty() { 1.0 } else { nums(&args, 1)?[0] };
                Ok(Self::TaylorGreen { amplitude })
            }
            "lamb_oseen" => {
                let v = nums(&args, 4)?;
                Ok(Self::LambOseen { circulation: v[0], core: v[1], centre: [v[2], v[3]] })
            }
            "rigidified" => {
                if args.len() != 2 {
                    return Err(Error::Config("`rigidified` takes a base field and a radius".into()));
                }
                let base = Box::new(Self::parse(&args[0])?);
                let radius = nums(&args[1..], 1)?[0];
                Ok(Self::Rigidified { base, radius, centre: [0.0, 0.0], velocity: None })
            }
            _ => Err(Error::Config(format!("unknown initial field `{name}`"))),
        }
    }
}

fn split_args(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Sample an initial field on the grid. The result is divergence-free.
pub fn make_initial_field(grid: &GridSpec, kind: &InitialField) -> Result<VectorField2> {
    let g = *grid;
    match kind {
        InitialField::Zero => Ok(VectorField2::zeros(g)),
        InitialField::Uniform(c) => Ok(VectorField2::constant(g, *c)),
        InitialField::TaylorGreen { amplitude } => {
            let k = 2.0 * PI / g.box_len;
            let a = *amplitude;
            Ok(VectorField2::from_fn(g, |x| {
                [a * (k * x[0]).sin() * (k * x[1]).cos(), -a * (k * x[0]).cos() * (k * x[1]).sin()]
            }))
        }
        InitialField::LambOseen { circulation, core, centre } => lamb_oseen(g, *circulation, *core, *centre),
        InitialField::Rigidified { base, radius, centre, velocity } => {
            let base = make_initial_field(grid, base)?;
            rigidify(&base, *radius, *centre, *velocity)
        }
    }
}

fn lamb_oseen(g: GridSpec, circulation: f64, core: f64, centre: [f64; 2]) -> Result<VectorField2> {
    if !(core > 0.0 && core < 0.1 * g.box_len) {
        return invalid(format!("vortex core {core} must lie in (0, 0.1 L)"));
    }
    if core < 2.0 * g.dx() {
        return Err(Error::UnderResolved(format!("vortex core {core} is below two cells")));
    }
    if circulation == 0.0 {
        return Ok(VectorField2::zeros(g));
    }
    let amp = circulation / (PI * core * core);
    let mut w = ScalarField::from_fn(g, |x| {
        let r = g.distance(centre, x);
        amp * (-(r * r) / (core * core)).exp()
    });
    let mean = w.data.iter().sum::<f64>() / g.len() as f64;
    w.data.iter_mut().for_each(|x| *x -= mean);
    let mut wh = forward_real(&g, &w.data);
    let n = g.n;
    for i in 0..n {
        for j in 0..n {
            let k2 = g.wavenumber(i).powi(2) + g.wavenumber(j).powi(2);
            wh[i * n + j] = if k2 == 0.0 { 0.0.into() } else { wh[i * n + j] / k2 };
        }
    }
    let psi = ScalarField { grid: g, data: inverse_real(&g, &wh) };
    Ok(curl_stream(&psi))
}

/// Stream function of the fluctuating part of a divergence-free field.
fn stream_function(u: &VectorField2) -> ScalarField {
    let g = u.grid;
    let n = g.n;
    let uh = forward_vector(u);
    let mut ph = vec![num_complex::Complex64::new(0.0, 0.0); g.len()];
    for i in 0..n {
        for j in 0..n {
            if g.is_nyquist(i) || g.is_nyquist(j) {
                continue;
            }
            let (kx, ky) = (g.wavenumber(i), g.wavenumber(j));
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                continue;
            }
            let k = i * n + j;
            let iu = num_complex::Complex64::new(0.0, 1.0);
            ph[k] = -(iu * ky * uh[0][k] - iu * kx * uh[1][k]) / k2;
        }
    }
    ScalarField { grid: g, data: inverse_real(&g, &ph) }
}

/// Narrowest blending ramp, in cells, that keeps the rigid core rigid to `1e-8`.
pub const MIN_RAMP_CELLS: f64 = 3.2;

/// Ramp geometry used by [`rigidify`]: flat out to `inner`, erfc profile of
/// width `width` centred at `mid`, zero beyond `outer`.
#[derive(Debug, Clone, Copy)]
struct Ramp {
    mid: f64,
    width: f64,
    outer: f64,
}

impl Ramp {
    fn new(radius: f64) -> Self {
        let inner = 0.9 * radius;
        let width = 0.2 * radius;
        let mid = inner + 4.5 * width;
        Self { mid, width, outer: mid + 5.0 * width }
    }

    fn eval(&self, rho: f64) -> f64 {
        if rho >= self.outer {
            0.0
        } else {
            0.5 * libm::erfc((rho - self.mid) / self.width)
        }
    }
}

/// Replace `base` by a rigid translation on the disc of radius `radius` while
/// keeping it divergence-free, via a blend of stream functions.
pub fn rigidify(base: &VectorField2, radius: f64, centre: [f64; 2], velocity: Option<[f64; 2]>) -> Result<VectorField2> {
    let g = base.grid;
    base.ensure_finite("rigidify base")?;
    if !(radius > 0.0) {
        return invalid(format!("rigidification radius must be positive, got {radius}"));
    }
    let ramp = Ramp::new(radius);
    if ramp.outer >= 0.48 * g.box_len {
        return invalid(format!("rigidification radius {radius} too large for the box"));
    }
    if ramp.width < MIN_RAMP_CELLS * g.dx() {
        return Err(Error::UnderResolved(format!("rigidification radius {radius} leaves a ramp narrower than {MIN_RAMP_CELLS} cells")));
    }
    let base = leray_project(base)?;
    let v = velocity.unwrap_or_else(|| interpolate(&base, centre));
    let mean = base.mean();
    let psi = stream_function(&base);
    let dpsi = ScalarField::from_fn(g, |_| 0.0);
    let mut dpsi = dpsi;
    for i in 0..g.n {
        for j in 0..g.n {
            let x = g.node(i, j);
            let d = g.delta(centre, x);
            let rho = d[0].hypot(d[1]);
            let b = ramp.eval(rho);
            if b == 0.0 {
                continue;
            }
            let k = g.index(i, j);
            let total = psi.data[k] + mean[0] * d[1] - mean[1] * d[0];
            let rigid = v[0] * d[1] - v[1] * d[0];
            dpsi.data[k] = b * (rigid - total);
        }
    }
    let mut u = base.clone();
    u.add_scaled(1.0, &curl_stream(&dpsi));
    let u = leray_project(&u)?;
    let tol = 1e-8 * v[0].hypot(v[1]) + 1e-12 * base.max_abs().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..g.n {
        for j in 0..g.n {
            if g.distance(centre, g.node(i, j)) < 0.9 * radius {
                let w = u.at(g.index(i, j));
                worst = worst.max((w[0] - v[0]).hypot(w[1] - v[1]));
            }
        }
    }
    if worst > tol {
        return Err(Error::UnderResolved(format!(
            "rigidified field deviates by {worst:.3e} from the rigid velocity; refine the grid or enlarge the radius"
        )));
    }
    Ok(u)
}
