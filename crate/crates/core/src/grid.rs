//! Uniform periodic grid, nodal fields and region masks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Default dealiasing fraction (two-thirds rule).
pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

/// Periodic square grid with `n` nodes per side on `[0, box_len)^2`.
///
/// Node `(i, j)` sits at `(i, j) * box_len / n` and is stored at `i * n + j`,
/// so `i` runs along x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub box_len: f64,
    pub dealias: f64,
}

impl GridSpec {
    pub fn new(n: usize, box_len: f64) -> Result<Self> {
        Self::with_dealias(n, box_len, DEFAULT_DEALIAS)
    }

    pub fn with_dealias(n: usize, box_len: f64, dealias: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return invalid(format!("grid size must be a power of two >= 16, got {n}"));
        }
        if !(box_len.is_finite() && box_len > 0.0) {
            return invalid(format!("box length must be positive, got {box_len}"));
        }
        if !(dealias > 0.0 && dealias <= 1.0) {
            return invalid(format!("dealias fraction must lie in (0, 1], got {dealias}"));
        }
        Ok(Self { n, box_len, dealias })
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.box_len / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    pub fn area(&self) -> f64 {
        self.box_len * self.box_len
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        let h = self.dx();
        [i as f64 * h, j as f64 * h]
    }

    /// Signed integer wavenumber of FFT index `idx`.
    #[inline]
    pub fn mode(&self, idx: usize) -> i64 {
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Angular wavenumber of FFT index `idx`.
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(idx) as f64 / self.box_len
    }

    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.n / 2
    }

    /// Largest retained integer mode under the dealiasing rule.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.dealias * self.n as f64) / 2.0).floor() as i64
    }

    /// Minimal-image displacement `b - a`.
    #[inline]
    pub fn delta(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        [wrap_delta(b[0] - a[0], self.box_len), wrap_delta(b[1] - a[1], self.box_len)]
    }

    #[inline]
    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = self.delta(a, b);
        d[0].hypot(d[1])
    }
}

/// Map a displacement onto `[-len/2, len/2)`.
#[inline]
pub fn wrap_delta(d: f64, len: f64) -> f64 {
    d - len * (d / len + 0.5).floor()
}

/// Map a coordinate onto `[0, len)`.
#[inline]
pub fn wrap_coord(x: f64, len: f64) -> f64 {
    let y = x - len * (x / len).floor();
    if y >= len {
        0.0
    } else {
        y
    }
}

/// Real scalar field sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, data: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for i in 0..grid.n {
            for j in 0..grid.n {
                data.push(f(grid.node(i, j)));
            }
        }
        Self { grid, data }
    }
}

/// Two-component velocity-like field sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    pub grid: GridSpec,
    pub data: [Vec<f64>; 2],
}

impl VectorField2 {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, data: [vec![0.0; grid.len()], vec![0.0; grid.len()]] }
    }

    pub fn constant(grid: GridSpec, c: [f64; 2]) -> Self {
        Self { grid, data: [vec![c[0]; grid.len()], vec![c[1]; grid.len()]] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.n {
            for j in 0..grid.n {
                let v = f(grid.node(i, j));
                let k = grid.index(i, j);
                out.data[0][k] = v[0];
                out.data[1][k] = v[1];
            }
        }
        out
    }

    pub fn from_components(grid: GridSpec, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() || v.len() != grid.len() {
            return invalid("component length does not match grid");
        }
        Ok(Self { grid, data: [u, v] })
    }

    #[inline]
    pub fn at(&self, k: usize) -> [f64; 2] {
        [self.data[0][k], self.data[1][k]]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| self.data[0][k].hypot(self.data[1][k]))
            .fold(0.0, f64::max)
    }

    /// Grid L2 inner product (sum times cell area).
    pub fn dot(&self, other: &Self) -> f64 {
        let s: f64 = (0..2)
            .map(|c| self.data[c].iter().zip(&other.data[c]).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        s * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn mean(&self) -> [f64; 2] {
        let n = self.grid.len() as f64;
        [self.data[0].iter().sum::<f64>() / n, self.data[1].iter().sum::<f64>() / n]
    }

    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        for c in 0..2 {
            for (x, y) in self.data[c].iter_mut().zip(&other.data[c]) {
                *x += a * y;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for c in 0..2 {
            out.data[c].iter_mut().for_each(|x| *x *= a);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }
}

/// Nonnegative per-node weights selecting a region for integrals and norms.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub grid: GridSpec,
    pub weights: Vec<f64>,
}

impl RegionMask {
    pub fn full(grid: GridSpec) -> Self {
        Self { grid, weights: vec![1.0; grid.len()] }
    }

    /// Nodes at periodic distance strictly greater than `s` from `centre`.
    pub fn exterior_disc(grid: GridSpec, centre: [f64; 2], s: f64) -> Self {
        Self::from_predicate(grid, |x| grid.distance(centre, x) > s)
    }

    /// Nodes at periodic distance strictly less than `s` from `centre`.
    pub fn interior_disc(grid: GridSpec, centre: [f64; 2], s: f64) -> Self {
        Self::from_predicate(grid, |x| grid.distance(centre, x) < s)
    }

    pub fn from_predicate(grid: GridSpec, keep: impl Fn([f64; 2]) -> bool) -> Self {
        let f = ScalarField::from_fn(grid, |x| if keep(x) { 1.0 } else { 0.0 });
        Self { grid, weights: f.data }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let weights = self.weights.iter().zip(&other.weights).map(|(a, b)| a * b).collect();
        Self { grid: self.grid, weights }
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.grid.cell_area()
    }
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"FDS1";

/// Write a velocity snapshot in the FDS1 layout: magic, u32 n, f64 box length,
/// f64 time, then u and v in row-major order, all little-endian.
pub fn write_snapshot(path: &Path, u: &VectorField2, time: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(u.grid.n as u32).to_le_bytes())?;
    w.write_all(&u.grid.box_len.to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for c in 0..2 {
        for x in &u.data[c] {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read an FDS1 snapshot, returning the field and its simulation time.
pub fn read_snapshot(path: &Path) -> Result<(VectorField2, f64)> {
    let bad = |reason: &str| Error::Format { path: path.to_path_buf(), reason: reason.into() };
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(bad("missing FDS1 magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let box_len = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let time = f64::from_le_bytes(b8);
    let grid = GridSpec::new(n, box_len).map_err(|e| bad(&e.to_string()))?;
    let mut field = VectorField2::zeros(grid);
    for c in 0..2 {
        for x in field.data[c].iter_mut() {
            r.read_exact(&mut b8).map_err(|_| bad("truncated data"))?;
            *x = f64::from_le_bytes(b8);
        }
    }
    if r.read(&mut b4)? != 0 {
        return Err(bad("trailing bytes"));
    }
    Ok((field, time))
}
