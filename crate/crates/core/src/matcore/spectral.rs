//! Numerical spectral oracle: Hermitian eigenvalues, singular values,
//! condition numbers, generalized determinants and right pseudo-inverses.
//!
//! Every closed form elsewhere in the crate is checked against these
//! routines, so they only rely on the Jacobi kernels and never on the
//! structure of the delay matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::jacobi::{hermitian_jacobi, row_jacobi, Scalar};
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Singular values below `DEFAULT_RANK_TOL * sigma_max` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Spectrum of a Hermitian matrix: ascending eigenvalues and the matching
/// unitary eigenvector matrix (eigenvector `k` is column `k`).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Aggregate spectral quantities of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// `sigma_max / sigma_min`, or `f64::INFINITY` when numerically rank deficient.
    pub kappa: f64,
    /// Natural log of the generalized determinant over the numerically nonzero singular values.
    pub gen_det_log: f64,
    pub rank_numeric: usize,
}

impl SpectralSummary {
    pub fn is_full_rank(&self) -> bool {
        self.rank_numeric == self.singular_values.len()
    }
}

fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    let Some(defect) = a.hermitian_defect() else {
        return Err(Error::DimensionMismatch(format!(
            "Hermitian eigenproblem needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    };
    if defect > 1e-12 * a.max_abs() {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

fn run_hermitian<T: Scalar>(mut buf: Vec<T>, n: usize, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<Complex64>>)> {
    let mut vecs = want_vectors.then(|| vec![T::zero(); n * n]);
    hermitian_jacobi(&mut buf, n, vecs.as_deref_mut())?;
    let values = (0..n).map(|i| buf[i * n + i].re()).collect();
    Ok((values, vecs.map(|v| v.into_iter().map(Scalar::to_complex).collect())))
}

fn hermitian_decompose(a: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    check_hermitian(a)?;
    let n = a.rows();
    let (values, vecs) = if a.is_real() {
        run_hermitian(a.entries().iter().map(|z| z.re).collect::<Vec<f64>>(), n, want_vectors)?
    } else {
        run_hermitian(a.entries().to_vec(), n, want_vectors)?
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    let vectors = vecs.map(|v| {
        let mut out = ComplexMatrix::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                out[(r, new_col)] = v[r * n + old_col];
            }
        }
        out
    });
    Ok((sorted, vectors))
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_decompose(a, false)?.0)
}

/// Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let (values, vectors) = hermitian_decompose(a, true)?;
    Ok(HermitianEigen {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// `log |det A|` of a Hermitian matrix from its eigenvalues.
pub fn hermitian_log_abs_det(a: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?.iter().map(|l| l.abs().ln()).sum())
}

/// Row-orthogonalized form of a short-fat matrix: `M = J * Q` with
/// orthogonal rows in `Q`.
struct RowSvd {
    rows: usize,
    cols: usize,
    q: Vec<Complex64>,
    j: Vec<Complex64>,
    sigma: Vec<f64>,
}

fn run_rows<T: Scalar>(mut m: Vec<T>, r: usize, c: usize) -> Result<RowSvd> {
    let mut j = vec![T::zero(); r * r];
    row_jacobi(&mut m, r, c, &mut j)?;
    let sigma = m
        .chunks_exact(c)
        .map(|row| row.iter().map(|x| x.abs_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(RowSvd {
        rows: r,
        cols: c,
        q: m.into_iter().map(Scalar::to_complex).collect(),
        j: j.into_iter().map(Scalar::to_complex).collect(),
        sigma,
    })
}

fn row_svd(m: &ComplexMatrix) -> Result<RowSvd> {
    let (r, c) = m.shape();
    debug_assert!(r <= c);
    if m.is_real() {
        run_rows(m.entries().iter().map(|z| z.re).collect::<Vec<f64>>(), r, c)
    } else {
        run_rows(m.entries().to_vec(), r, c)
    }
}

/// Singular values, descending; `min(rows, cols)` of them.
///
/// Computed by one-sided Jacobi on the short side, which is equivalent to
/// diagonalizing the smaller Gram matrix but keeps small singular values
/// accurate.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let svd = if m.rows() <= m.cols() {
        row_svd(m)?
    } else {
        row_svd(&m.adjoint())?
    };
    let mut s = svd.sigma;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Singular values through the Gram route: `sqrt` of the eigenvalues of the
/// smaller of `M M*` and `M* M`, clamped at zero, descending.
pub fn gram_singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let gram = if m.rows() <= m.cols() {
        m.gram_rows()
    } else {
        m.adjoint().gram_rows()
    };
    let mut s: Vec<f64> = hermitian_eigenvalues(&gram)?
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    s.reverse();
    Ok(s)
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?[0])
}

pub fn summarize_singular_values(singular_values: Vec<f64>, rank_tol_rel: f64) -> SpectralSummary {
    let sigma_max = singular_values[0];
    let sigma_min = *singular_values.last().expect("non-empty");
    let cutoff = rank_tol_rel * sigma_max;
    let rank_numeric = singular_values.iter().filter(|&&s| s > cutoff).count();
    let kappa = if rank_numeric == singular_values.len() && sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    let gen_det_log = singular_values.iter().filter(|&&s| s > cutoff).map(|s| s.ln()).sum();
    SpectralSummary {
        singular_values,
        sigma_max,
        sigma_min,
        kappa,
        gen_det_log,
        rank_numeric,
    }
}

/// Singular values, condition number, generalized determinant and numeric
/// rank, with singular values below `rank_tol_rel * sigma_max` treated as zero.
pub fn spectral_summary(m: &ComplexMatrix, rank_tol_rel: f64) -> Result<SpectralSummary> {
    Ok(summarize_singular_values(singular_values(m)?, rank_tol_rel))
}

/// Right pseudo-inverse `M^+ = M* (M M*)^{-1}` of a full-row-rank
/// short-fat matrix.
pub fn pseudo_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (r, c) = m.shape();
    if r > c {
        return Err(Error::DimensionMismatch(format!(
            "right pseudo-inverse needs rows <= cols, got {r}x{c}"
        )));
    }
    let svd = row_svd(m)?;
    let smax = svd.sigma.iter().copied().fold(0.0, f64::max);
    let smin = svd.sigma.iter().copied().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin <= DEFAULT_RANK_TOL * smax {
        return Err(Error::RankDeficient {
            ratio: if smax == 0.0 { 0.0 } else { smin / smax },
        });
    }
    // M = J Q, Q Q* = diag(sigma^2)  =>  M^+ = Q* diag(sigma^-2) J*
    let RowSvd { rows, cols, q, j, sigma } = svd;
    let mut out = ComplexMatrix::zeros(cols, rows);
    for i in 0..rows {
        let w = 1.0 / (sigma[i] * sigma[i]);
        for k in 0..cols {
            let qk = q[i * cols + k].conj() * w;
            if qk.re == 0.0 && qk.im == 0.0 {
                continue;
            }
            for l in 0..rows {
                out[(k, l)] += qk * j[l * rows + i].conj();
            }
        }
    }
    Ok(out)
}

/// `log S(M)`, the log of the product of all `min(rows, cols)` singular
/// values. Returns `f64::NEG_INFINITY` when numerically rank deficient.
pub fn generalized_determinant(m: &ComplexMatrix) -> Result<f64> {
    let s = spectral_summary(m, DEFAULT_RANK_TOL)?;
    if s.is_full_rank() {
        Ok(s.gen_det_log)
    } else {
        Ok(f64::NEG_INFINITY)
    }
}
