//! Brute-force constrained least squares: minimise `|u - v|^2` subject to
//! `div v = 0` everywhere and `D(v) = 0` on the disc cells, via conjugate
//! gradients on the penalised normal equations
//! `(I + (div^T div + D^T chi D) / eps) v = u`.
//!
//! Derivatives use a private FFT path so the oracle shares nothing with the
//! projector under test beyond the grid layout.

use std::f64::consts::PI;

use disclimit::{GridSpec, VectorField2};
use num_complex::Complex64;
use rustfft::FftPlanner;

pub struct Oracle {
    n: usize,
    kx: Vec<f64>,
    chi: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Oracle {
    /// Sharp indicator of nodes within `radius` of `centre`.
    pub fn new(grid: GridSpec, centre: [f64; 2], radius: f64) -> Self {
        let n = grid.n;
        let l = grid.box_len;
        let kx = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as f64 } else if i == n / 2 { 0.0 } else { i as f64 - n as f64 };
                2.0 * PI * m / l
            })
            .collect();
        let mut chi = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut d = [i as f64 * l / n as f64 - centre[0], j as f64 * l / n as f64 - centre[1]];
                for c in &mut d {
                    *c -= l * (*c / l).round();
                }
                if d[0] * d[0] + d[1] * d[1] < radius * radius {
                    chi[i * n + j] = 1.0;
                }
            }
        }
        let mut planner = FftPlanner::new();
        Self { n, kx, chi, fft: planner.plan_fft_forward(n), ifft: planner.plan_fft_inverse(n) }
    }

    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.ifft } else { &self.fft };
        for row in buf.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = buf[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                buf[i * n + j] = col[i];
            }
        }
        if inverse {
            let s = 1.0 / (n * n) as f64;
            buf.iter_mut().for_each(|z| *z *= s);
        }
    }

    /// Spectral first derivative along axis 0 (x) or 1 (y), Nyquist removed.
    fn d(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft2(&mut buf, false);
        for i in 0..n {
            for j in 0..n {
                let k = if axis == 0 { self.kx[i] } else { self.kx[j] };
                let nyq = i == n / 2 || j == n / 2;
                buf[i * n + j] = if nyq { Complex64::new(0.0, 0.0) } else { buf[i * n + j] * Complex64::new(0.0, k) };
            }
        }
        self.fft2(&mut buf, true);
        buf.iter().map(|z| z.re).collect()
    }

    fn apply(&self, x: &[f64], eps: f64) -> Vec<f64> {
        let nn = self.n * self.n;
        let (u, v) = x.split_at(nn);
        let (ux, uy, vx, vy) = (self.d(u, 0), self.d(u, 1), self.d(v, 0), self.d(v, 1));
        let div: Vec<f64> = ux.iter().zip(&vy).map(|(a, b)| a + b).collect();
        let s11: Vec<f64> = ux.iter().zip(&self.chi).map(|(a, c)| a * c).collect();
        let s22: Vec<f64> = vy.iter().zip(&self.chi).map(|(a, c)| a * c).collect();
        let s12: Vec<f64> = uy.iter().zip(&vx).zip(&self.chi).map(|((a, b), c)| 0.5 * (a + b) * c).collect();
        let (dx_div, dy_div) = (self.d(&div, 0), self.d(&div, 1));
        let (dx11, dy22, dx12, dy12) = (self.d(&s11, 0), self.d(&s22, 1), self.d(&s12, 0), self.d(&s12, 1));
        let mut out = x.to_vec();
        for k in 0..nn {
            out[k] -= (dx_div[k] + dx11[k] + dy12[k]) / eps;
            out[nn + k] -= (dy_div[k] + dy22[k] + dx12[k]) / eps;
        }
        out
    }

    /// `(|div v| / |grad v|, |chi D(v)| / |grad v|)` in the discrete L2 sense.
    pub fn constraint_residual(&self, v: &VectorField2) -> (f64, f64) {
        let (ux, uy, vx, vy) = (self.d(&v.data[0], 0), self.d(&v.data[0], 1), self.d(&v.data[1], 0), self.d(&v.data[1], 1));
        let (mut div, mut strain, mut grad) = (0.0, 0.0, 0.0);
        for k in 0..self.n * self.n {
            div += (ux[k] + vy[k]).powi(2);
            let s12 = 0.5 * (uy[k] + vx[k]);
            strain += self.chi[k] * (ux[k] * ux[k] + vy[k] * vy[k] + 2.0 * s12 * s12);
            grad += ux[k] * ux[k] + uy[k] * uy[k] + vx[k] * vx[k] + vy[k] * vy[k];
        }
        ((div / grad).sqrt(), (strain / grad).sqrt())
    }

    /// Returns the projection, the number of CG iterations used and the final
    /// relative residual.
    pub fn project(&self, u: &VectorField2, eps: f64, tol: f64, max_iter: usize) -> (VectorField2, usize, f64) {
        let b: Vec<f64> = u.data[0].iter().chain(&u.data[1]).copied().collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut x = b.clone();
        let ax = self.apply(&x, eps);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let bb = dot(&b, &b);
        let mut it = 0;
        while it < max_iter && rr > tol * tol * bb {
            let ap = self.apply(&p, eps);
            let alpha = rr / dot(&p, &ap);
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
            it += 1;
        }
        let nn = self.n * self.n;
        let field = VectorField2::from_components(u.grid, x[..nn].to_vec(), x[nn..].to_vec()).expect("oracle field");
        (field, it, (rr / bb).sqrt())
    }
}
