//! Thin wrappers over LAPACK routines.

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric `n x n` matrix stored column-major.
/// Returns ascending eigenvalues and the eigenvectors column-major.
pub fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n {
        return Err(Error::Linalg("matrix size mismatch".into()));
    }
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let jobz = b'V' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    let ni = n as i32;
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut wq = [0.0f64];
    let mut iwq = [0i32];
    // SAFETY: all pointers reference live buffers of the sizes LAPACK expects;
    // the first call only queries workspace sizes.
    unsafe {
        lapack_sys::dsyevd_(&jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), wq.as_mut_ptr(), &-1, iwq.as_mut_ptr(), &-1, &mut info);
    }
    if info != 0 {
        return Err(Error::Linalg(format!("dsyevd workspace query failed, info = {info}")));
    }
    let lwork = wq[0] as i32;
    let liwork = iwq[0];
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    // SAFETY: as above, with workspace buffers sized from the query.
    unsafe {
        lapack_sys::dsyevd_(&jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info);
    }
    if info != 0 {
        return Err(Error::Linalg(format!("dsyevd failed, info = {info}")));
    }
    Ok((w, a))
}

/// Solve a 2x2 system, failing if it is numerically singular.
pub fn solve2(m: [[f64; 2]; 2], b: [f64; 2]) -> Result<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if !(det.abs() > 1e-14 * scale * scale) {
        return Err(Error::Linalg(format!("singular 2x2 system, det = {det:e}")));
    }
    Ok([(b[0] * m[1][1] - m[0][1] * b[1]) / det, (m[0][0] * b[1] - m[1][0] * b[0]) / det])
}

/// Solve a symmetric positive 3x3 system by Gaussian elimination.
pub fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap_or(c);
        if m[p][c].abs() < 1e-300 {
            return Err(Error::Linalg("singular 3x3 system".into()));
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..3 {
            let f = m[r][c] / m[c][c];
            for k in c..3 {
                m[r][k] -= f * m[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = ((r + 1)..3).map(|k| m[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Ok(x)
}
