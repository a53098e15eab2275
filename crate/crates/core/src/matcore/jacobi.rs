//! Cyclic Jacobi kernels.
//!
//! Two variants share the same complex plane rotation:
//!
//! - [`hermitian_jacobi`] diagonalizes a Hermitian matrix in place by
//!   two-sided rotations `A <- G* A G`.
//! - [`row_jacobi`] orthogonalizes the rows of a short-fat matrix by
//!   one-sided rotations `M <- G* M` (Hestenes). This is the two-sided
//!   method applied implicitly to `M M*`, without ever forming it, so small
//!   singular values keep their relative accuracy.
//!
//! Both are written over [`Scalar`] so real input runs on `f64` directly.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

pub(crate) trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_re(x: f64) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn abs_sqr(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn abs_sqr(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn abs_sqr(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Unitary plane rotation acting on coordinates `p < q`:
///
/// ```text
/// G = [ g_pp  g_pq ]
///     [ g_qp  g_qq ]
/// ```
///
/// chosen so that `G* [[app, apq], [conj(apq), aqq]] G` is diagonal.
#[derive(Clone, Copy)]
struct Rotation<T> {
    pp: T,
    pq: T,
    qp: T,
    qq: T,
    /// `tan` of the real rotation angle times `|apq|`; the diagonal shifts by it.
    shift: f64,
}

impl<T: Scalar> Rotation<T> {
    fn annihilating(app: f64, aqq: f64, apq: T) -> Option<Self> {
        let mag = apq.abs_sqr().sqrt();
        if mag == 0.0 {
            return None;
        }
        // Phase that makes the off-diagonal entry real and positive.
        let phase = apq.scale(1.0 / mag).conj();
        let theta = (aqq - app) / (2.0 * mag);
        let t = if theta.is_infinite() {
            0.5 / theta
        } else {
            theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
        };
        let t = if theta == 0.0 { 1.0 } else { t };
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        Some(Self {
            pp: T::from_re(c),
            pq: T::from_re(s),
            qp: phase.scale(-s),
            qq: phase.scale(c),
            shift: t * mag,
        })
    }
}

/// `cols[p], cols[q] <- cols * G` on a row-major `rows x n` buffer.
#[inline]
fn rotate_columns<T: Scalar>(a: &mut [T], n: usize, p: usize, q: usize, g: &Rotation<T>) {
    for row in a.chunks_exact_mut(n) {
        let (x, y) = (row[p], row[q]);
        row[p] = x * g.pp + y * g.qp;
        row[q] = x * g.pq + y * g.qq;
    }
}

/// `rows[p], rows[q] <- G* rows` on a row-major `? x n` buffer.
#[inline]
fn rotate_rows<T: Scalar>(a: &mut [T], n: usize, p: usize, q: usize, g: &Rotation<T>) {
    let (head, tail) = a.split_at_mut(q * n);
    let rp = &mut head[p * n..(p + 1) * n];
    let rq = &mut tail[..n];
    let (cpp, cqp, cpq, cqq) = (g.pp.conj(), g.qp.conj(), g.pq.conj(), g.qq.conj());
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (u, v) = (*x, *y);
        *x = cpp * u + cqp * v;
        *y = cpq * u + cqq * v;
    }
}

/// Diagonalizes the Hermitian `n x n` row-major matrix `a` in place.
///
/// On return the diagonal holds the eigenvalues (unsorted); when `vecs` is
/// given it is overwritten with the unitary eigenvector matrix (columns).
pub(crate) fn hermitian_jacobi<T: Scalar>(a: &mut [T], n: usize, mut vecs: Option<&mut [T]>) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    if let Some(v) = vecs.as_deref_mut() {
        v.iter_mut().for_each(|x| *x = T::zero());
        for i in 0..n {
            v[i * n + i] = T::one();
        }
    }
    for i in 0..n {
        a[i * n + i] = T::from_re(a[i * n + i].re());
    }
    if n < 2 {
        return Ok(());
    }
    let frob: f64 = a.iter().map(|x| x.abs_sqr()).sum::<f64>().sqrt();
    let floor = f64::MIN_POSITIVE.max(frob * 1e-300);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.abs_sqr().sqrt();
                let app = a[p * n + p].re();
                let aqq = a[q * n + q].re();
                if mag <= floor || mag <= f64::EPSILON * (app.abs() * aqq.abs()).sqrt() {
                    continue;
                }
                let Some(g) = Rotation::annihilating(app, aqq, apq) else {
                    continue;
                };
                rotated = true;
                rotate_columns(a, n, p, q, &g);
                rotate_rows(a, n, p, q, &g);
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                a[p * n + p] = T::from_re(app - g.shift);
                a[q * n + q] = T::from_re(aqq + g.shift);
                if let Some(v) = vecs.as_deref_mut() {
                    rotate_columns(v, n, p, q, &g);
                }
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS })
}

/// One-sided Jacobi on the rows of a row-major `r x c` matrix with `r <= c`.
///
/// On return the rows of `m` are mutually orthogonal and `j` (r x r,
/// row-major) is the accumulated unitary with `M_in = J * M_out`. Row norms
/// of `M_out` are the singular values.
pub(crate) fn row_jacobi<T: Scalar>(m: &mut [T], r: usize, c: usize, j: &mut [T]) -> Result<()> {
    debug_assert_eq!(m.len(), r * c);
    debug_assert_eq!(j.len(), r * r);
    j.iter_mut().for_each(|x| *x = T::zero());
    for i in 0..r {
        j[i * r + i] = T::one();
    }
    if r < 2 {
        return Ok(());
    }
    let dot = |m: &[T], p: usize, q: usize| -> (f64, f64, T) {
        let (rp, rq) = (&m[p * c..(p + 1) * c], &m[q * c..(q + 1) * c]);
        let mut alpha = 0.0;
        let mut beta = 0.0;
        let mut gamma = T::zero();
        for (&x, &y) in rp.iter().zip(rq) {
            alpha += x.abs_sqr();
            beta += y.abs_sqr();
            gamma = gamma + x * y.conj();
        }
        (alpha, beta, gamma)
    };

    let tol = f64::EPSILON * (c as f64).sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..r - 1 {
            for q in p + 1..r {
                let (alpha, beta, gamma) = dot(m, p, q);
                let mag = gamma.abs_sqr().sqrt();
                if mag == 0.0 || mag <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                let Some(g) = Rotation::annihilating(alpha, beta, gamma) else {
                    continue;
                };
                rotated = true;
                rotate_rows(m, c, p, q, &g);
                rotate_columns(j, r, p, q, &g);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS })
}
