//! Orthogonal projection onto divergence-free fields that move rigidly on a disc.
//!
//! [`RigidProjector`] is the discrete orthogonal projector onto spectrally
//! divergence-free grid fields whose nodal values inside the disc are a rigid
//! motion `V + w y^perp`. It is built once per grid and disc from an
//! eigen-decomposition of the Leray kernel restricted to the disc nodes.
//! Constraint directions with eigenvalue below [`EIGEN_CUTOFF`] are dropped:
//! band-limited fields can barely violate them, and enforcing them would
//! amplify roundoff. Rigidity therefore holds to about `1e-6` relative on
//! large discs rather than to roundoff.
//!
//! [`harmonic_decomposition`] is the constructive continuum split: boundary
//! trace, exterior harmonic `q2`, rigid translation and rotation. It supplies
//! the `q2` coefficients and serves as an independent cross-check.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridSpec, VectorField2};
use crate::interp::SplineInterpolator;
use crate::linalg::{solve2, solve3, symmetric_eigen};
use crate::spectral::{forward_vector, inverse_vector, leray_spectral};

/// Smallest supported disc radius in grid cells.
pub const MIN_RADIUS_CELLS: f64 = 2.5;
/// Largest supported radius as a fraction of the box length.
pub const MAX_RADIUS_FRACTION: f64 = 0.2;
/// Relative eigenvalue cutoff for the constrained Leray kernel.
pub const EIGEN_CUTOFF: f64 = 2e-10;

/// Disc `B_r` with its boundary quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscGeometry {
    pub centre: [f64; 2],
    pub radius: f64,
    /// Boundary quadrature nodes `K`.
    pub quad_points: usize,
    /// Retained circle Fourier modes `M`.
    pub modes: usize,
}

impl DiscGeometry {
    pub fn new(centre: [f64; 2], radius: f64) -> Self {
        Self { centre, radius, quad_points: 128, modes: 16 }
    }

    pub fn with_modes(mut self, modes: usize, quad_points: usize) -> Self {
        self.modes = modes;
        self.quad_points = quad_points;
        self
    }

    /// Check the disc against `grid`.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return invalid(format!("disc radius must be positive, got {}", self.radius));
        }
        if self.modes < 4 || self.quad_points < 8 * self.modes {
            return invalid(format!("need modes >= 4 and quad_points >= 8 modes, got {} and {}", self.modes, self.quad_points));
        }
        if self.radius < MIN_RADIUS_CELLS * grid.dx() {
            return Err(Error::UnderResolved(format!(
                "disc radius {} is below {MIN_RADIUS_CELLS} cells (dx = {})",
                self.radius,
                grid.dx()
            )));
        }
        if self.radius > MAX_RADIUS_FRACTION * grid.box_len {
            return invalid(format!("disc radius {} exceeds {MAX_RADIUS_FRACTION} L", self.radius));
        }
        Ok(())
    }

    fn boundary_point(&self, theta: f64) -> [f64; 2] {
        [self.centre[0] + self.radius * theta.cos(), self.centre[1] + self.radius * theta.sin()]
    }
}

/// Truncated Fourier series on a circle: `f(t) = cos[0] + sum_m cos[m] cos(mt) + sin[m] sin(mt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleSeries {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl CircleSeries {
    fn from_samples(samples: &[f64], modes: usize) -> Self {
        let k = samples.len() as f64;
        let mut cos = vec![0.0; modes + 1];
        let mut sin = vec![0.0; modes + 1];
        for m in 0..=modes {
            let (mut c, mut s) = (0.0, 0.0);
            for (q, f) in samples.iter().enumerate() {
                let t = 2.0 * PI * q as f64 / k * m as f64;
                c += f * t.cos();
                s += f * t.sin();
            }
            let w = if m == 0 { 1.0 / k } else { 2.0 / k };
            cos[m] = w * c;
            sin[m] = w * s;
        }
        Self { cos, sin }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        (0..self.cos.len()).map(|m| self.cos[m] * (m as f64 * theta).cos() + self.sin[m] * (m as f64 * theta).sin()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        d(&self.cos, &other.cos).max(d(&self.sin, &other.sin))
    }
}

/// Circle Fourier coefficients of the boundary values, with `n = e_rho` pointing out of the disc.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub velocity: [CircleSeries; 2],
    pub normal: CircleSeries,
}

fn boundary_samples(interp: &SplineInterpolator, disc: &DiscGeometry, k: usize) -> Vec<[f64; 2]> {
    (0..k).map(|q| interp.eval(disc.boundary_point(2.0 * PI * q as f64 / k as f64))).collect()
}

fn trace_from_samples(samples: &[[f64; 2]], modes: usize) -> BoundaryTrace {
    let k = samples.len();
    let un: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(q, v)| {
            let t = 2.0 * PI * q as f64 / k as f64;
            v[0] * t.cos() + v[1] * t.sin()
        })
        .collect();
    let c0: Vec<f64> = samples.iter().map(|v| v[0]).collect();
    let c1: Vec<f64> = samples.iter().map(|v| v[1]).collect();
    BoundaryTrace {
        velocity: [CircleSeries::from_samples(&c0, modes), CircleSeries::from_samples(&c1, modes)],
        normal: CircleSeries::from_samples(&un, modes),
    }
}

/// Trapezoidal circle coefficients of `u` and `u . e_rho` on the disc boundary.
pub fn boundary_trace(u: &VectorField2, disc: &DiscGeometry) -> Result<BoundaryTrace> {
    disc.validate(&u.grid)?;
    u.ensure_finite("boundary_trace input")?;
    let interp = SplineInterpolator::new(u);
    Ok(trace_from_samples(&boundary_samples(&interp, disc, disc.quad_points), disc.modes))
}

/// `||u||_{L2(boundary)}` by the trapezoidal rule.
pub fn trace_norm(u: &VectorField2, disc: &DiscGeometry) -> Result<f64> {
    disc.validate(&u.grid)?;
    u.ensure_finite("trace_norm input")?;
    let interp = SplineInterpolator::new(u);
    let k = disc.quad_points;
    let s: f64 = boundary_samples(&interp, disc, k).iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum();
    Ok((s * 2.0 * PI * disc.radius / k as f64).sqrt())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Constructive split `u = (V + w y^perp on the disc, u - grad q2 outside) + grad q2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDecomposition {
    pub disc: DiscGeometry,
    pub translation: [f64; 2],
    pub rotation: f64,
    /// `(a_m, b_m)` for `m = 1..=M` in `q2 = sum rho^-m (a_m cos m theta + b_m sin m theta)`.
    pub q2: Vec<[f64; 2]>,
}

impl HarmonicDecomposition {
    /// Gradient of `q2` at a point outside the disc, relative to the disc centre.
    pub fn grad_q2(&self, y: [f64; 2]) -> [f64; 2] {
        let rho = y[0].hypot(y[1]);
        let th = y[1].atan2(y[0]);
        let (mut dr, mut dt) = (0.0, 0.0);
        for (idx, ab) in self.q2.iter().enumerate() {
            let m = (idx + 1) as f64;
            let p = rho.powf(-m - 1.0);
            let (c, s) = ((m * th).cos(), (m * th).sin());
            dr += -m * p * (ab[0] * c + ab[1] * s);
            dt += m * p * (-ab[0] * s + ab[1] * c);
        }
        let (c, s) = (th.cos(), th.sin());
        [dr * c - dt * s, dr * s + dt * c]
    }

    pub fn q2_value(&self, y: [f64; 2]) -> f64 {
        let rho = y[0].hypot(y[1]);
        let th = y[1].atan2(y[0]);
        self.q2
            .iter()
            .enumerate()
            .map(|(idx, ab)| {
                let m = (idx + 1) as f64;
                rho.powf(-m) * (ab[0] * (m * th).cos() + ab[1] * (m * th).sin())
            })
            .sum()
    }

    /// Nodal field: rigid inside, `u - grad(c q2)` outside with a cutoff `c`
    /// vanishing beyond `L/4`, blended over one cell at the boundary.
    pub fn projected_field(&self, u: &VectorField2) -> VectorField2 {
        let g = u.grid;
        let h = g.dx();
        let r = self.disc.radius;
        let (r0, r1) = (0.2 * g.box_len, 0.25 * g.box_len);
        let mut out = u.clone();
        for i in 0..g.n {
            for j in 0..g.n {
                let k = g.index(i, j);
                let y = g.delta(self.disc.centre, g.node(i, j));
                let rho = y[0].hypot(y[1]);
                let rigid = [self.translation[0] - self.rotation * y[1], self.translation[1] + self.rotation * y[0]];
                let beta = ((rho - (r - 0.5 * h)) / h).clamp(0.0, 1.0);
                let mut ext = u.at(k);
                if rho < r1 && rho > 0.0 {
                    let gq = self.grad_q2(y);
                    let (cut, dcut) = if rho <= r0 {
                        (1.0, 0.0)
                    } else {
                        let t = (rho - r0) / (r1 - r0);
                        (0.5 * (1.0 + (PI * t).cos()), -0.5 * PI * (PI * t).sin() / (r1 - r0))
                    };
                    let q = if dcut != 0.0 { self.q2_value(y) } else { 0.0 };
                    ext[0] -= cut * gq[0] + q * dcut * y[0] / rho;
                    ext[1] -= cut * gq[1] + q * dcut * y[1] / rho;
                }
                out.data[0][k] = (1.0 - beta) * rigid[0] + beta * ext[0];
                out.data[1][k] = (1.0 - beta) * rigid[1] + beta * ext[1];
            }
        }
        out
    }
}

/// Compute translation, rotation and exterior harmonic of a divergence-free field.
pub fn harmonic_decomposition(u: &VectorField2, disc: &DiscGeometry) -> Result<HarmonicDecomposition> {
    disc.validate(&u.grid)?;
    u.ensure_finite("harmonic_decomposition input")?;
    let interp = SplineInterpolator::new(u);
    let r = disc.radius;
    let trace = trace_from_samples(&boundary_samples(&interp, disc, disc.quad_points), disc.modes);

    // Disc integrals of u and u . y^perp on a polar Gauss-Legendre x trapezoid grid.
    let (gx, gw) = gauss_legendre(24);
    let nt = disc.quad_points;
    let (mut iu, mut iw) = ([0.0; 2], 0.0);
    for (x, w) in gx.iter().zip(&gw) {
        let rho = 0.5 * r * (x + 1.0);
        let wr = 0.5 * r * w * rho * 2.0 * PI / nt as f64;
        for q in 0..nt {
            let t = 2.0 * PI * q as f64 / nt as f64;
            let y = [rho * t.cos(), rho * t.sin()];
            let v = interp.eval([disc.centre[0] + y[0], disc.centre[1] + y[1]]);
            iu[0] += wr * v[0];
            iu[1] += wr * v[1];
            iw += wr * (-v[0] * y[1] + v[1] * y[0]);
        }
    }

    // m = 1: pi r^2 V + pi a1 = int u and a1 - r^2 V = -r^2 (u.n)_1, per component.
    let m1 = [[PI * r * r, PI], [-r * r, 1.0]];
    let [v1, a1] = solve2(m1, [iu[0], -r * r * trace.normal.cos[1]])?;
    let [v2, b1] = solve2(m1, [iu[1], -r * r * trace.normal.sin[1]])?;
    let mut q2 = vec![[a1, b1]];
    for m in 2..=disc.modes {
        let f = -r.powi(m as i32 + 1) / m as f64;
        q2.push([f * trace.normal.cos[m], f * trace.normal.sin[m]]);
    }
    let rotation = 2.0 / (PI * r.powi(4)) * iw;
    Ok(HarmonicDecomposition { disc: *disc, translation: [v1, v2], rotation, q2 })
}

/// Output of [`RigidProjector::decompose`].
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    /// `P_r u`.
    pub projected: VectorField2,
    /// Exterior gradient part, zero on the disc nodes.
    pub grad_q2: VectorField2,
    pub translation: [f64; 2],
    pub rotation: f64,
    /// Circle-harmonic coefficients `(a_m, b_m)`, `m = 1..=M`, of the exterior potential.
    pub q2_coeffs: Vec<[f64; 2]>,
}

/// Exact orthogonal projector onto the discrete rigid-on-disc subspace.
#[derive(Debug, Clone)]
pub struct RigidProjector {
    grid: GridSpec,
    disc: DiscGeometry,
    nodes: Vec<usize>,
    local: Vec<[f64; 2]>,
    interior: Vec<bool>,
    rigid_basis: [Vec<f64>; 3],
    eigvecs: Vec<f64>,
    inv_eig: Vec<f64>,
}

impl RigidProjector {
    pub fn new(grid: &GridSpec, disc: &DiscGeometry) -> Result<Self> {
        disc.validate(grid)?;
        let g = *grid;
        let h = g.dx();
        let mut nodes = Vec::new();
        let mut local = Vec::new();
        let mut interior = Vec::new();
        for i in 0..g.n {
            for j in 0..g.n {
                let y = g.delta(disc.centre, g.node(i, j));
                let rho = y[0].hypot(y[1]);
                if rho < disc.radius {
                    nodes.push(g.index(i, j));
                    local.push(y);
                    interior.push(rho + h / 2f64.sqrt() < disc.radius);
                }
            }
        }
        let nn = nodes.len();
        let dim = 2 * nn;

        // Leray kernel: response at offset (di, dj) to a unit impulse at the origin.
        let mut kernel = Vec::with_capacity(2);
        for c in 0..2 {
            let mut delta = VectorField2::zeros(g);
            delta.data[c][0] = 1.0;
            let mut dh = forward_vector(&delta);
            leray_spectral(&g, &mut dh);
            kernel.push(inverse_vector(&g, &dh));
        }
        let mut kmat = vec![0.0; dim * dim];
        for (b, kb) in kernel.iter().enumerate() {
            for q in 0..nn {
                let (iq, jq) = (nodes[q] / g.n, nodes[q] % g.n);
                let col = (b * nn + q) * dim;
                for a in 0..2 {
                    for p in 0..nn {
                        let (ip, jp) = (nodes[p] / g.n, nodes[p] % g.n);
                        let off = ((ip + g.n - iq) % g.n) * g.n + (jp + g.n - jq) % g.n;
                        kmat[col + a * nn + p] = kb.data[a][off];
                    }
                }
            }
        }

        let rigid_basis = orthonormal_rigid_basis(&local);
        // S = Q K Q with Q the complement of the rigid modes.
        let kq: Vec<Vec<f64>> = rigid_basis
            .iter()
            .map(|qv| (0..dim).map(|row| (0..dim).map(|col| kmat[col * dim + row] * qv[col]).sum()).collect())
            .collect();
        let mut qkq = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                qkq[a][b] = (0..dim).map(|i| rigid_basis[a][i] * kq[b][i]).sum();
            }
        }
        for col in 0..dim {
            for row in 0..dim {
                let mut s = kmat[col * dim + row];
                for a in 0..3 {
                    s -= rigid_basis[a][row] * kq[a][col] + kq[a][row] * rigid_basis[a][col];
                    for b in 0..3 {
                        s += rigid_basis[a][row] * qkq[a][b] * rigid_basis[b][col];
                    }
                }
                kmat[col * dim + row] = s;
            }
        }

        let (w, v) = symmetric_eigen(kmat, dim)?;
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..dim).filter(|&i| w[i] > EIGEN_CUTOFF * wmax).collect();
        let mut eigvecs = Vec::with_capacity(keep.len() * dim);
        for &i in &keep {
            eigvecs.extend_from_slice(&v[i * dim..(i + 1) * dim]);
        }
        let inv_eig = keep.iter().map(|&i| 1.0 / w[i]).collect();
        Ok(Self { grid: g, disc: *disc, nodes, local, interior, rigid_basis, eigvecs, inv_eig })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn disc(&self) -> &DiscGeometry {
        &self.disc
    }

    /// Number of grid nodes inside the disc.
    pub fn disc_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn remove_rigid(&self, x: &mut [f64]) {
        for q in &self.rigid_basis {
            let c: f64 = q.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= c * qi);
        }
    }

    /// `P_r u`.
    pub fn project(&self, u: &VectorField2) -> Result<VectorField2> {
        Ok(self.project_parts(u)?.1)
    }

    /// Returns `(L u, P_r u)` with `L` the Leray projector.
    fn project_parts(&self, u: &VectorField2) -> Result<(VectorField2, VectorField2)> {
        if u.grid != self.grid {
            return invalid("field grid does not match projector grid");
        }
        u.ensure_finite("project_rigid input")?;
        let g = self.grid;
        let nn = self.nodes.len();
        let dim = 2 * nn;
        let mut uh = forward_vector(u);
        leray_spectral(&g, &mut uh);
        let lu = inverse_vector(&g, &uh);

        let mut b: Vec<f64> = (0..dim).map(|i| lu.data[i / nn][self.nodes[i % nn]]).collect();
        self.remove_rigid(&mut b);
        let mut mu = vec![0.0; dim];
        for (col, inv) in self.eigvecs.chunks_exact(dim).zip(&self.inv_eig) {
            let c: f64 = col.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() * inv;
            mu.iter_mut().zip(col).for_each(|(m, x)| *m += c * x);
        }
        self.remove_rigid(&mut mu);

        let mut f = VectorField2::zeros(g);
        for i in 0..dim {
            f.data[i / nn][self.nodes[i % nn]] = mu[i];
        }
        let mut fh = forward_vector(&f);
        leray_spectral(&g, &mut fh);
        for c in 0..2 {
            for (a, b) in uh[c].iter_mut().zip(&fh[c]) {
                *a -= b;
            }
        }
        Ok((lu, inverse_vector(&g, &uh)))
    }

    /// Least-squares rigid motion `(V, w)` of a field on the disc nodes.
    pub fn rigid_fit(&self, u: &VectorField2) -> Result<([f64; 2], f64)> {
        let (mut m, mut rhs) = ([[0.0; 3]; 3], [0.0; 3]);
        for (k, y) in self.nodes.iter().zip(&self.local) {
            let v = u.at(*k);
            let rows = [[1.0, 0.0, -y[1]], [0.0, 1.0, y[0]]];
            for (row, vc) in rows.iter().zip(v) {
                for a in 0..3 {
                    rhs[a] += row[a] * vc;
                    for b in 0..3 {
                        m[a][b] += row[a] * row[b];
                    }
                }
            }
        }
        let x = solve3(m, rhs)?;
        Ok(([x[0], x[1]], x[2]))
    }

    /// Relative RMS departure from rigid motion on nodes whose cell lies inside the disc.
    pub fn rigid_residual(&self, u: &VectorField2) -> Result<f64> {
        let (v, w) = self.rigid_fit(u)?;
        let (mut num, mut den) = (0.0, 0.0);
        for ((k, y), inside) in self.nodes.iter().zip(&self.local).zip(&self.interior) {
            if !inside {
                continue;
            }
            let rig = [v[0] - w * y[1], v[1] + w * y[0]];
            let val = u.at(*k);
            num += (val[0] - rig[0]).powi(2) + (val[1] - rig[1]).powi(2);
            den += rig[0] * rig[0] + rig[1] * rig[1];
        }
        Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
    }

    /// Full decomposition of a divergence-free field.
    pub fn decompose(&self, u: &VectorField2) -> Result<DecompositionResult> {
        let (lu, projected) = self.project_parts(u)?;
        let (translation, rotation) = self.rigid_fit(&projected)?;
        let mut grad_q2 = lu.sub(&projected);
        for &k in &self.nodes {
            grad_q2.data[0][k] = 0.0;
            grad_q2.data[1][k] = 0.0;
        }
        let q2_coeffs = harmonic_decomposition(u, &self.disc)?.q2;
        Ok(DecompositionResult { projected, grad_q2, translation, rotation, q2_coeffs })
    }
}

fn orthonormal_rigid_basis(local: &[[f64; 2]]) -> [Vec<f64>; 3] {
    let nn = local.len();
    let mut cols: [Vec<f64>; 3] = [vec![0.0; 2 * nn], vec![0.0; 2 * nn], vec![0.0; 2 * nn]];
    for (p, y) in local.iter().enumerate() {
        cols[0][p] = 1.0;
        cols[1][nn + p] = 1.0;
        cols[2][p] = -y[1];
        cols[2][nn + p] = y[0];
    }
    for a in 0..3 {
        for _ in 0..2 {
            for b in 0..a {
                let c: f64 = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
                let (head, tail) = cols.split_at_mut(a);
                tail[0].iter_mut().zip(&head[b]).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = cols[a].iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 0.0 {
            cols[a].iter_mut().for_each(|x| *x /= nrm);
        }
    }
    cols
}

/// Build a projector and decompose `u` in one call.
pub fn project_rigid(u: &VectorField2, disc: &DiscGeometry) -> Result<DecompositionResult> {
    RigidProjector::new(&u.grid, disc)?.decompose(u)
}

/// `||u - P_r u||` over the whole box.
pub fn projection_error(u: &VectorField2, disc: &DiscGeometry) -> Result<f64> {
    let p = RigidProjector::new(&u.grid, disc)?;
    Ok(u.sub(&p.project(u)?).l2_norm())
}

/// Least-squares line through `(log r, log e)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

pub fn rate_fit(samples: &[(f64, f64)]) -> Result<RateFit> {
    if samples.len() < 3 {
        return invalid(format!("rate fit needs at least 3 samples, got {}", samples.len()));
    }
    if let Some(s) = samples.iter().find(|(r, e)| !(*r > 0.0 && *e > 0.0 && r.is_finite() && e.is_finite())) {
        return invalid(format!("rate fit needs positive samples, got ({}, {})", s.0, s.1));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("rate fit needs at least two distinct radii");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(RateFit { slope, intercept, residual: (ss / n).sqrt() })
}
