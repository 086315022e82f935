//! FFT transforms, Leray projection, spectral derivatives and Sobolev norms.
//!
//! Spectra are full `n x n` complex arrays indexed like the nodal data, with
//! the first FFT index along x. Odd derivatives and the Leray projector drop
//! the Nyquist lines so that real fields stay real.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::grid::{GridSpec, RegionMask, ScalarField, VectorField2};

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
        })
        .clone()
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2(buf: &mut [Complex64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    plan.process_with_scratch(buf, &mut scratch);
    transpose(buf, n);
    plan.process_with_scratch(buf, &mut scratch);
    transpose(buf, n);
}

/// Unnormalized forward 2-D DFT in place.
pub fn fft2_forward(grid: &GridSpec, buf: &mut [Complex64]) {
    let p = plans(grid.n);
    fft2(buf, grid.n, &p.fwd);
}

/// Inverse 2-D DFT in place, normalized so it inverts [`fft2_forward`].
pub fn fft2_inverse(grid: &GridSpec, buf: &mut [Complex64]) {
    let p = plans(grid.n);
    fft2(buf, grid.n, &p.inv);
    let s = 1.0 / grid.len() as f64;
    buf.iter_mut().for_each(|z| *z *= s);
}

pub fn forward_real(grid: &GridSpec, a: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft2_forward(grid, &mut buf);
    buf
}

/// Transform two real fields with a single complex FFT.
pub fn forward_pair(grid: &GridSpec, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n;
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    fft2_forward(grid, &mut z);
    let mut fa = vec![Complex64::new(0.0, 0.0); z.len()];
    let mut fb = fa.clone();
    for i in 0..n {
        let mi = (n - i) % n;
        for j in 0..n {
            let mj = (n - j) % n;
            let zk = z[i * n + j];
            let zm = z[mi * n + mj].conj();
            fa[i * n + j] = 0.5 * (zk + zm);
            fb[i * n + j] = Complex64::new(0.0, -0.5) * (zk - zm);
        }
    }
    (fa, fb)
}

/// Real part of the inverse transform.
pub fn inverse_real(grid: &GridSpec, fa: &[Complex64]) -> Vec<f64> {
    let mut buf = fa.to_vec();
    fft2_inverse(grid, &mut buf);
    buf.iter().map(|z| z.re).collect()
}

/// Inverse transform of two Hermitian spectra with a single complex FFT.
pub fn inverse_pair(grid: &GridSpec, fa: &[Complex64], fb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut z: Vec<Complex64> = fa.iter().zip(fb).map(|(&x, &y)| x + i * y).collect();
    fft2_inverse(grid, &mut z);
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

/// Velocity spectrum of a vector field.
pub fn forward_vector(u: &VectorField2) -> [Vec<Complex64>; 2] {
    let (a, b) = forward_pair(&u.grid, &u.data[0], &u.data[1]);
    [a, b]
}

pub fn inverse_vector(grid: &GridSpec, uh: &[Vec<Complex64>; 2]) -> VectorField2 {
    let (a, b) = inverse_pair(grid, &uh[0], &uh[1]);
    VectorField2 { grid: *grid, data: [a, b] }
}

/// Wavenumber tables `(kx, ky)` per spectral index.
pub fn wavenumbers(grid: &GridSpec) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n;
    let mut kx = vec![0.0; n * n];
    let mut ky = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            kx[i * n + j] = grid.wavenumber(i);
            ky[i * n + j] = grid.wavenumber(j);
        }
    }
    (kx, ky)
}

/// True where either index is a Nyquist line.
pub fn nyquist_mask(grid: &GridSpec) -> Vec<bool> {
    let n = grid.n;
    (0..n * n).map(|k| grid.is_nyquist(k / n) || grid.is_nyquist(k % n)).collect()
}

/// Square truncation mask for the dealiasing rule.
pub fn dealias_mask(grid: &GridSpec) -> Vec<bool> {
    let n = grid.n;
    let kc = grid.dealias_cutoff();
    (0..n * n)
        .map(|k| grid.mode(k / n).abs() <= kc && grid.mode(k % n).abs() <= kc && !grid.is_nyquist(k / n) && !grid.is_nyquist(k % n))
        .collect()
}

/// Apply the Leray projector to a spectrum pair in place.
pub fn leray_spectral(grid: &GridSpec, uh: &mut [Vec<Complex64>; 2]) {
    let n = grid.n;
    for i in 0..n {
        let kx = grid.wavenumber(i);
        for j in 0..n {
            let k = i * n + j;
            if grid.is_nyquist(i) || grid.is_nyquist(j) {
                uh[0][k] = Complex64::new(0.0, 0.0);
                uh[1][k] = Complex64::new(0.0, 0.0);
                continue;
            }
            if i == 0 && j == 0 {
                continue;
            }
            let ky = grid.wavenumber(j);
            let k2 = kx * kx + ky * ky;
            let dot = (uh[0][k] * kx + uh[1][k] * ky) / k2;
            uh[0][k] -= dot * kx;
            uh[1][k] -= dot * ky;
        }
    }
}

/// Leray projection onto periodic divergence-free fields.
pub fn leray_project(u: &VectorField2) -> Result<VectorField2> {
    u.ensure_finite("leray_project input")?;
    let mut uh = forward_vector(u);
    leray_spectral(&u.grid, &mut uh);
    Ok(inverse_vector(&u.grid, &uh))
}

/// Largest `|k . u_hat|` relative to the largest `|k| |u_hat|`.
pub fn divergence_residual(u: &VectorField2) -> f64 {
    let g = u.grid;
    let uh = forward_vector(u);
    let (kx, ky) = wavenumbers(&g);
    let nyq = nyquist_mask(&g);
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for k in 0..g.len() {
        if nyq[k] {
            continue;
        }
        num = num.max((uh[0][k] * kx[k] + uh[1][k] * ky[k]).norm());
        den = den.max(kx[k].hypot(ky[k]) * uh[0][k].norm().hypot(uh[1][k].norm()));
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn spectral_derivative(grid: &GridSpec, fh: &[Complex64], order: [u32; 2]) -> Vec<Complex64> {
    let n = grid.n;
    let mut out = vec![Complex64::new(0.0, 0.0); fh.len()];
    let odd = (order[0] + order[1]) % 2 == 1;
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            if odd && (grid.is_nyquist(i) || grid.is_nyquist(j)) {
                continue;
            }
            let ikx = Complex64::new(0.0, grid.wavenumber(i));
            let iky = Complex64::new(0.0, grid.wavenumber(j));
            out[k] = fh[k] * ikx.powu(order[0]) * iky.powu(order[1]);
        }
    }
    out
}

/// Spectral partial derivative of a scalar field.
pub fn derivative(f: &ScalarField, order: [u32; 2]) -> ScalarField {
    let fh = forward_real(&f.grid, &f.data);
    let d = spectral_derivative(&f.grid, &fh, order);
    ScalarField { grid: f.grid, data: inverse_real(&f.grid, &d) }
}

/// Velocity gradient with `d[a][b] = du_a / dx_b`.
#[derive(Debug, Clone)]
pub struct VelocityGradient {
    pub grid: GridSpec,
    pub d: [[Vec<f64>; 2]; 2],
}

impl VelocityGradient {
    /// Symmetric part `D(u)` as `[D11, D12, D22]`.
    pub fn strain(&self) -> [Vec<f64>; 3] {
        let d12 = self.d[0][1].iter().zip(&self.d[1][0]).map(|(a, b)| 0.5 * (a + b)).collect();
        [self.d[0][0].clone(), d12, self.d[1][1].clone()]
    }

    pub fn divergence(&self) -> Vec<f64> {
        self.d[0][0].iter().zip(&self.d[1][1]).map(|(a, b)| a + b).collect()
    }

    pub fn vorticity(&self) -> Vec<f64> {
        self.d[1][0].iter().zip(&self.d[0][1]).map(|(a, b)| a - b).collect()
    }
}

pub fn spectral_gradient(u: &VectorField2) -> VelocityGradient {
    let g = u.grid;
    let uh = forward_vector(u);
    let d = |c: usize, o: [u32; 2]| spectral_derivative(&g, &uh[c], o);
    let (a, b) = inverse_pair(&g, &d(0, [1, 0]), &d(0, [0, 1]));
    let (c, e) = inverse_pair(&g, &d(1, [1, 0]), &d(1, [0, 1]));
    VelocityGradient { grid: g, d: [[a, b], [c, e]] }
}

/// Velocity `(d psi/dy, -d psi/dx)` of a periodic stream function.
pub fn curl_stream(psi: &ScalarField) -> VectorField2 {
    let g = psi.grid;
    let ph = forward_real(&g, &psi.data);
    let u = spectral_derivative(&g, &ph, [0, 1]);
    let mut v = spectral_derivative(&g, &ph, [1, 0]);
    v.iter_mut().for_each(|z| *z = -*z);
    inverse_vector(&g, &[u, v])
}

/// Sobolev order for [`norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    H1,
    H2,
}

/// Masked Sobolev norm with spectrally computed derivatives.
pub fn norm(u: &VectorField2, mask: &RegionMask, order: Norm) -> Result<f64> {
    if mask.grid != u.grid {
        return invalid("mask grid does not match field grid");
    }
    u.ensure_finite("norm input")?;
    let g = u.grid;
    let w = &mask.weights;
    let weighted = |f: &[f64], mult: f64| -> f64 { f.iter().zip(w).map(|(x, wi)| mult * wi * x * x).sum::<f64>() };
    let mut s = weighted(&u.data[0], 1.0) + weighted(&u.data[1], 1.0);
    if order != Norm::L2 {
        let uh = forward_vector(u);
        for c in 0..2 {
            let (a, b) = inverse_pair(&g, &spectral_derivative(&g, &uh[c], [1, 0]), &spectral_derivative(&g, &uh[c], [0, 1]));
            s += weighted(&a, 1.0) + weighted(&b, 1.0);
            if order == Norm::H2 {
                let (xx, yy) = inverse_pair(&g, &spectral_derivative(&g, &uh[c], [2, 0]), &spectral_derivative(&g, &uh[c], [0, 2]));
                let xy = inverse_real(&g, &spectral_derivative(&g, &uh[c], [1, 1]));
                s += weighted(&xx, 1.0) + weighted(&yy, 1.0) + weighted(&xy, 2.0);
            }
        }
    }
    let out = (s * g.cell_area()).sqrt();
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NonFinite("norm".into()))
    }
}
