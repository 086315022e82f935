//! Periodic cubic B-spline interpolation of nodal fields.
//!
//! Coefficients come from a spectral prefilter, so the spline passes through
//! the nodal values and is exact for constants.

use crate::grid::{wrap_coord, GridSpec, VectorField2};
use crate::spectral::{forward_vector, inverse_vector};

/// Cubic spline representation of a vector field, evaluable anywhere.
#[derive(Debug, Clone)]
pub struct SplineInterpolator {
    grid: GridSpec,
    coef: [Vec<f64>; 2],
}

#[inline]
fn bspline_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    let s = 1.0 - t;
    [s * s * s / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0]
}

impl SplineInterpolator {
    pub fn new(u: &VectorField2) -> Self {
        let g = u.grid;
        let n = g.n;
        let mut uh = forward_vector(u);
        let sym: Vec<f64> = (0..n)
            .map(|i| (4.0 + 2.0 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()) / 6.0)
            .collect();
        for i in 0..n {
            for j in 0..n {
                let s = 1.0 / (sym[i] * sym[j]);
                uh[0][i * n + j] *= s;
                uh[1][i * n + j] *= s;
            }
        }
        let c = inverse_vector(&g, &uh);
        Self { grid: g, coef: c.data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Value at an arbitrary point; coordinates are wrapped periodically.
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        let g = &self.grid;
        let n = g.n;
        let h = g.dx();
        let sx = wrap_coord(x[0], g.box_len) / h;
        let sy = wrap_coord(x[1], g.box_len) / h;
        let ix = sx.floor();
        let iy = sy.floor();
        let wx = bspline_weights(sx - ix);
        let wy = bspline_weights(sy - iy);
        let ix = ix as usize + n;
        let iy = iy as usize + n;
        let mut out = [0.0; 2];
        for (a, wa) in wx.iter().enumerate() {
            let row = ((ix + a - 1) % n) * n;
            let mut acc = [0.0; 2];
            for (b, wb) in wy.iter().enumerate() {
                let k = row + (iy + b - 1) % n;
                acc[0] += wb * self.coef[0][k];
                acc[1] += wb * self.coef[1][k];
            }
            out[0] += wa * acc[0];
            out[1] += wa * acc[1];
        }
        out
    }
}

/// One-off interpolation; build a [`SplineInterpolator`] for repeated queries.
pub fn interpolate(u: &VectorField2, x: [f64; 2]) -> [f64; 2] {
    SplineInterpolator::new(u).eval(x)
}
