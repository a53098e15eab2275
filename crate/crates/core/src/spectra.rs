//! Closed-form spectra for the scalar and Hermitian delay matrices and for
//! tridiagonal Toeplitz matrices.
//!
//! Determinant-like quantities are returned on a natural-log scale so that
//! large `n` or `|omega| > 1` never overflows.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::delaymat::shifted_square;
use crate::error::{Error, Result};

/// Window used to decide that a singular value equals 1.
pub const UNIT_WINDOW: f64 = 1e-12;

/// Tridiagonal Toeplitz matrix of order `n` with diagonal `a`,
/// super-diagonal `b` and sub-diagonal `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToeplitzTriSpec {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub n: usize,
}

impl ToeplitzTriSpec {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("Toeplitz order must be positive".into()));
        }
        if ![a, b, c].iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { a, b, c, n })
    }

    /// The scalar Gram matrix `A_n` for weight `omega`.
    pub fn scalar_gram(omega: Complex64, n: usize) -> Result<Self> {
        Self::new(Complex64::new(1.0 + omega.norm_sqr(), 0.0), omega, omega.conj(), n)
    }
}

fn theta(j: usize, n: usize) -> f64 {
    j as f64 * PI / (n as f64 + 1.0)
}

/// `a + 2 sqrt(bc) cos(j pi/(n+1))` for `j = 1..=n`, principal square root.
pub fn toeplitz_tridiag_eigs(t: &ToeplitzTriSpec) -> Vec<Complex64> {
    let root = (t.b * t.c).sqrt();
    (1..=t.n).map(|j| t.a + 2.0 * root * theta(j, t.n).cos()).collect()
}

/// `exp(z) - 1` without cancellation for small `z`.
fn complex_expm1(z: Complex64) -> Complex64 {
    let half = (z.im / 2.0).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * half * half, z.re.exp() * z.im.sin())
}

/// Natural log of the determinant: `re` is `log|det|`, `im` the phase in
/// `(-pi, pi]`. A singular matrix gives `re = -inf`.
pub fn toeplitz_tridiag_det(t: &ToeplitzTriSpec) -> Complex64 {
    let (a, bc, n) = (t.a, t.b * t.c, t.n);
    let disc = a * a - 4.0 * bc;
    let scale = a.norm_sqr() + 4.0 * t.b.norm() * t.c.norm();
    let log_det = if disc.norm() <= 1e-12 * scale {
        // Double root a/2: det = (n+1) (a/2)^n.
        ((n + 1) as f64).ln() + n as f64 * (a / 2.0).ln()
    } else {
        // det = (r1^{n+1} - r2^{n+1}) / (r1 - r2) with |r1| >= |r2|.
        let mut s = disc.sqrt();
        if (a.conj() * s).re < 0.0 {
            s = -s;
        }
        let r1 = (a + s) / 2.0;
        let r2 = bc / r1;
        let q = r2 / r1;
        let tail = if q.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            (-complex_expm1((n + 1) as f64 * q.ln())).ln()
        };
        (n + 1) as f64 * r1.ln() + tail - s.ln()
    };
    let phase = Complex64::from_polar(1.0, log_det.im).arg();
    Complex64::new(log_det.re, phase)
}

/// Singular values of the scalar delay matrix `M_n`, descending.
pub fn scalar_singular_values(omega: Complex64, n: usize) -> Vec<f64> {
    let x = omega.norm();
    let mut s: Vec<f64> = (1..=n).map(|j| shifted_square(x, theta(j, n)).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Exact condition number of the scalar delay matrix.
pub fn scalar_condition_number(omega: Complex64, n: usize) -> f64 {
    let s = scalar_singular_values(omega, n);
    s[0] / s[n - 1]
}

/// Eigenvalues of the Gram matrix for Hermitian `W`: entry `[j-1][k]` is
/// `lambda_k^2 + 2 lambda_k cos(j pi/(n+1)) + 1`.
pub fn hermitian_gram_eigs(eigvals_w: &[f64], n: usize) -> Vec<Vec<f64>> {
    (1..=n)
        .map(|j| {
            let th = theta(j, n);
            eigvals_w.iter().map(|&l| shifted_square(l, th)).collect()
        })
        .collect()
}

/// `1/2 log sum_{k=0}^{n} x^{2k}` for `x >= 0`.
fn half_log_power_sum(x: f64, n: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if (x - 1.0).abs() <= UNIT_WINDOW {
        return 0.5 * ((n + 1) as f64).ln();
    }
    let np1 = (n + 1) as f64;
    let (lead, y) = if x < 1.0 { (0.0, x) } else { (n as f64 * 2.0 * x.ln(), 1.0 / x) };
    // sum_{k=0}^{n} y^{2k} = (1 - y^{2(n+1)}) / (1 - y^2), y < 1
    let ly = 2.0 * y.ln();
    let ratio = (-(np1 * ly).exp_m1()).ln() - (-ly.exp_m1()).ln();
    0.5 * (lead + ratio)
}

/// `log S(M_n)` for scalar weight `omega`.
pub fn scalar_gen_det(omega: Complex64, n: usize) -> f64 {
    half_log_power_sum(omega.norm(), n)
}

fn check_sing(sing_w: &[f64]) -> Result<()> {
    if sing_w.is_empty() {
        return Err(Error::InvalidParams("need at least one singular value".into()));
    }
    if let Some(bad) = sing_w.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(Error::InvalidParams(format!("singular value {bad} is not a finite non-negative number")));
    }
    Ok(())
}

/// `log S(M_{n,m})` for Hermitian `W` with singular values `sing_w`.
pub fn hermitian_gen_det(sing_w: &[f64], n: usize) -> Result<f64> {
    check_sing(sing_w)?;
    Ok(sing_w.iter().map(|&s| half_log_power_sum(s, n)).sum())
}

pub(crate) fn validate_sing(sing_w: &[f64]) -> Result<()> {
    check_sing(sing_w)
}
