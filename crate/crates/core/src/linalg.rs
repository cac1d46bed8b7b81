//! Small dense kernels on row-major `n × n` buffers.
//!
//! The filters and the coefficient update call these thousands of times per
//! sweep, so they work in place on flat slices instead of allocating
//! `DMatrix` temporaries.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::dist::std_normal;
use crate::error::{Error, Result};

/// In-place Cholesky of a symmetric matrix. On success the lower triangle
/// holds `L` with `A = L Lᵀ` and the strict upper triangle is zeroed.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let djj = d.sqrt();
        a[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                s -= a[ri + k] * a[rj + k];
            }
            a[ri + j] = s / djj;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Solve `L x = b` in place.
pub fn forward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        let row = &l[i * n..i * n + i];
        for (k, lik) in row.iter().enumerate() {
            s -= lik * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve `Lᵀ x = b` in place.
pub fn backward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve `(L Lᵀ) x = b` in place.
pub fn chol_solve(l: &[f64], n: usize, b: &mut [f64]) {
    forward_solve(l, n, b);
    backward_solve(l, n, b);
}

/// Inverse of `L Lᵀ` written into `out`; `work` needs `n * n` entries.
pub fn chol_inverse(l: &[f64], n: usize, out: &mut [f64], work: &mut [f64]) {
    // work <- L^{-1} (lower triangular)
    work[..n * n].fill(0.0);
    for j in 0..n {
        work[j * n + j] = 1.0 / l[j * n + j];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[i * n + k] * work[k * n + j];
            }
            work[i * n + j] = s / l[i * n + i];
        }
    }
    // out <- L^{-T} L^{-1}
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..n {
                s += work[k * n + i] * work[k * n + j];
            }
            out[i * n + j] = s;
            out[j * n + i] = s;
        }
    }
}

pub fn symmetrize(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
}

/// Factor `cov` into `s` such that `s sᵀ = cov`, retrying with a diagonal
/// ridge and finally clamping negative eigenvalues. `s` is row-major.
pub fn psd_factor(cov: &[f64], n: usize, s: &mut [f64]) -> Result<()> {
    s[..n * n].copy_from_slice(&cov[..n * n]);
    if cholesky_in_place(s, n) {
        return Ok(());
    }
    let scale = (0..n).map(|i| cov[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
    for ridge in [1e-12, 1e-10] {
        s[..n * n].copy_from_slice(&cov[..n * n]);
        for i in 0..n {
            s[i * n + i] += ridge * scale;
        }
        if cholesky_in_place(s, n) {
            return Ok(());
        }
    }
    let m = DMatrix::from_row_slice(n, n, &cov[..n * n]);
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("covariance has non-finite entries"));
    }
    let eig = SymmetricEigen::new(m);
    for i in 0..n {
        for j in 0..n {
            s[i * n + j] = eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt();
        }
    }
    Ok(())
}

/// `out = mean + s z` with `z` standard normal.
pub fn draw_with_factor<R: Rng + ?Sized>(
    mean: &[f64],
    s: &[f64],
    n: usize,
    z: &mut [f64],
    out: &mut [f64],
    rng: &mut R,
) {
    for zi in z.iter_mut().take(n) {
        *zi = std_normal(rng);
    }
    for i in 0..n {
        let row = &s[i * n..(i + 1) * n];
        let mut acc = mean[i];
        for (sij, zj) in row.iter().zip(z.iter()) {
            acc += sij * zj;
        }
        out[i] = acc;
    }
}

/// Draw from `N(P⁻¹ b, P⁻¹)` given a precision matrix `P` (row-major).
///
/// `P` is overwritten with its Cholesky factor. On failure a ridge of
/// `1e-8` is added once before giving up.
pub fn draw_from_precision<R: Rng + ?Sized>(
    precision: &mut [f64],
    b: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let backup = precision[..n * n].to_vec();
    if !cholesky_in_place(precision, n) {
        precision[..n * n].copy_from_slice(&backup);
        for i in 0..n {
            precision[i * n + i] += 1e-8;
        }
        if !cholesky_in_place(precision, n) {
            return Err(Error::numerical(
                "posterior precision of the coefficient block is not positive definite",
            ));
        }
    }
    let mut mean = b[..n].to_vec();
    chol_solve(precision, n, &mut mean);
    let mut z: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
    backward_solve(precision, n, &mut z);
    Ok(mean.iter().zip(&z).map(|(m, e)| m + e).collect())
}
