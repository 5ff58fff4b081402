//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Matrices whose reciprocal condition number falls below this are treated as singular.
pub const RCOND_MIN: f64 = 1e-12;

/// Kronecker product of two dense matrices.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i * b.len() + j] = ai * bj;
        }
    }
    out
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Extreme eigenvalues of a symmetric matrix.
pub fn eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = symmetrize(m).symmetric_eigenvalues();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Reciprocal condition number of a symmetric PSD matrix, 0 when indefinite.
pub fn rcond_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let (lo, hi) = eig_range(m);
    if hi <= 0.0 || lo <= 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let rc = rcond_sym(m);
    if !(rc >= RCOND_MIN) {
        return Err(Error::singular(what, rc));
    }
    let chol = symmetrize(m)
        .cholesky()
        .ok_or_else(|| Error::singular(what, rc))?;
    Ok(symmetrize(&chol.inverse()))
}

/// Log-determinant of a symmetric positive-definite matrix.
pub fn spd_logdet(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let chol = symmetrize(m)
        .cholesky()
        .ok_or_else(|| Error::singular(what, rcond_sym(m)))?;
    Ok(chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum())
}

/// Moore-Penrose inverse of a symmetric PSD matrix with its numerical rank.
pub fn sym_pinv(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let n = m.nrows();
    let eig = symmetrize(m).symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = max * 1e-10 * n.max(1) as f64;
    let mut out = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > tol && lam > 0.0 {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / lam;
        }
    }
    (out, rank)
}

/// Numerical rank of a symmetric PSD matrix.
pub fn sym_rank(m: &DMatrix<f64>) -> usize {
    sym_pinv(m).1
}

/// Whether `c` lies in the column space of the symmetric PSD matrix `m`.
pub fn in_range(m: &DMatrix<f64>, pinv: &DMatrix<f64>, c: &DVector<f64>) -> bool {
    let proj = m * (pinv * c);
    let scale = c.norm().max(f64::MIN_POSITIVE);
    (proj - c).norm() <= 1e-8 * scale
}

/// Symmetric square root factor `L` with `L Lᵀ = m` for a PSD matrix.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = symmetrize(m).cholesky() {
        return ch.l();
    }
    let eig = symmetrize(m).symmetric_eigen();
    let n = m.nrows();
    let mut l = DMatrix::zeros(n, n);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        for r in 0..n {
            l[(r, i)] = eig.eigenvectors[(r, i)] * s;
        }
    }
    l
}

/// Quadratic form `xᵀ A x`.
pub fn quad(a: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(a * x))
}

/// Largest entrywise relative deviation between two matrices.
pub fn max_rel_dev(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.amax().max(b.amax()).max(f64::MIN_POSITIVE);
    (a - b).amax() / scale
}
