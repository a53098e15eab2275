//! Delay matrix `M` (mn x m(n+1)) and Gram matrix `A = M M*` (mn x mn).
//!
//! `M` carries identity blocks on the block diagonal and `W` on the block
//! super-diagonal. The analysis modules use this unsigned form; the
//! recurrence itself produces `-W` above the diagonal, available through
//! [`build_signed_delay_matrix`]. Flipping the sign of `W` is a unitary
//! change of coordinates (alternating block signs), so both forms share
//! singular values.
//!
//! For Hermitian `W = U diag(lambda) U*` the Gram matrix factors as
//!
//! ```text
//! A = Ub P^T S diag(mu) S P Ub*
//! ```
//!
//! with `Ub = diag(U, ..., U)`, `P` the perfect-shuffle permutation, `S` the
//! block-diagonal sine basis and `mu[j][k] = lambda_k^2 + 2 lambda_k cos(j pi/(n+1)) + 1`.
//! [`HermitianFactorization`] applies `A^{-1}` and `M^+` through that chain
//! without forming any mn x mn matrix.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eigen, ComplexMatrix};

/// Declared structure of the weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightClass {
    Scalar,
    Hermitian,
    General,
    Unitary,
    Zero,
}

impl fmt::Display for WeightClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WeightClass::Scalar => "scalar",
            WeightClass::Hermitian => "hermitian",
            WeightClass::General => "general",
            WeightClass::Unitary => "unitary",
            WeightClass::Zero => "zero",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for WeightClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scalar" => Ok(WeightClass::Scalar),
            "hermitian" => Ok(WeightClass::Hermitian),
            "general" => Ok(WeightClass::General),
            "unitary" => Ok(WeightClass::Unitary),
            "zero" => Ok(WeightClass::Zero),
            other => Err(Error::Parse(format!("unknown weight class '{other}'"))),
        }
    }
}

pub(crate) fn unitary_defect(w: &ComplexMatrix) -> f64 {
    let prod = w.gram_rows();
    prod.max_abs_diff(&ComplexMatrix::identity(w.rows()))
}

/// One delay-matrix instance: `n` lags, state dimension `m`, weight `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySpec {
    n: usize,
    w: ComplexMatrix,
    class: WeightClass,
}

impl DelaySpec {
    /// Validates `W` against the declared class.
    pub fn new(n: usize, w: ComplexMatrix, class: WeightClass) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("number of lags n must be positive".into()));
        }
        if !w.is_square() {
            return Err(Error::InvalidSpec(format!("W must be square, got {}x{}", w.rows(), w.cols())));
        }
        let m = w.rows();
        match class {
            WeightClass::Scalar if m != 1 => {
                return Err(Error::InvalidSpec(format!("scalar class needs m = 1, got m = {m}")));
            }
            WeightClass::Hermitian if !w.is_hermitian() => {
                return Err(Error::NotHermitian {
                    defect: w.hermitian_defect().unwrap_or(f64::INFINITY),
                });
            }
            WeightClass::Unitary => {
                let d = unitary_defect(&w);
                if d > 1e-10 {
                    return Err(Error::InvalidSpec(format!("W is not unitary (max |W W* - I| = {d:e})")));
                }
            }
            WeightClass::Zero if w.max_abs() != 0.0 => {
                return Err(Error::InvalidSpec("zero class needs W = 0".into()));
            }
            _ => {}
        }
        Ok(Self { n, w, class })
    }

    /// Scalar spec `W = [omega]`.
    pub fn scalar(omega: Complex64, n: usize) -> Result<Self> {
        Self::new(n, ComplexMatrix::scalar(omega), WeightClass::Scalar)
    }

    /// Picks the most specific class `W` satisfies, in the order
    /// zero, scalar, Hermitian, unitary, general.
    pub fn infer(n: usize, w: ComplexMatrix) -> Result<Self> {
        let class = if w.is_square() && w.max_abs() == 0.0 {
            WeightClass::Zero
        } else if w.is_square() && w.rows() == 1 {
            WeightClass::Scalar
        } else if w.is_hermitian() {
            WeightClass::Hermitian
        } else if w.is_square() && unitary_defect(&w) <= 1e-10 {
            WeightClass::Unitary
        } else {
            WeightClass::General
        };
        Self::new(n, w, class)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.w.rows()
    }

    pub fn w(&self) -> &ComplexMatrix {
        &self.w
    }

    pub fn class(&self) -> WeightClass {
        self.class
    }

    /// Same `W` with a different lag count.
    pub fn with_lags(&self, n: usize) -> Result<Self> {
        Self::new(n, self.w.clone(), self.class)
    }

    /// The scalar weight when `m = 1`.
    pub fn omega(&self) -> Option<Complex64> {
        (self.m() == 1).then(|| self.w[(0, 0)])
    }

    /// True when `W` itself is Hermitian, whatever the declared class.
    pub fn has_hermitian_weight(&self) -> bool {
        self.w.is_hermitian() || self.w.max_abs() == 0.0
    }
}

fn assemble_delay(n: usize, w: &ComplexMatrix) -> ComplexMatrix {
    let m = w.rows();
    let mut out = ComplexMatrix::zeros(m * n, m * (n + 1));
    let id = ComplexMatrix::identity(m);
    for j in 0..n {
        out.set_block(j * m, j * m, &id);
        out.set_block(j * m, (j + 1) * m, w);
    }
    out
}

/// `M` with `+W` on the block super-diagonal.
pub fn build_delay_matrix(spec: &DelaySpec) -> ComplexMatrix {
    assemble_delay(spec.n, &spec.w)
}

/// `M` with `-W` on the block super-diagonal, as produced by the recurrence.
pub fn build_signed_delay_matrix(spec: &DelaySpec) -> ComplexMatrix {
    assemble_delay(spec.n, &spec.w.neg())
}

/// `A = M M*`: `I + W W*` on the diagonal, `W` above, `W*` below.
pub fn build_gram(spec: &DelaySpec) -> ComplexMatrix {
    let (n, m) = (spec.n, spec.m());
    let w = &spec.w;
    let w_adj = w.adjoint();
    let diag = ComplexMatrix::identity(m).add(&w.gram_rows()).expect("square blocks");
    let mut out = ComplexMatrix::zeros(m * n, m * n);
    for j in 0..n {
        out.set_block(j * m, j * m, &diag);
        if j + 1 < n {
            out.set_block(j * m, (j + 1) * m, w);
            out.set_block((j + 1) * m, j * m, &w_adj);
        }
    }
    out
}

/// Block tridiagonal `T` with diagonal blocks `I + diag(lambda)^2` and
/// off-diagonal blocks `diag(lambda)`: the Gram matrix of a Hermitian spec
/// in the eigenbasis of `W`.
pub fn central_tridiagonal(eigvals_w: &[f64], n: usize) -> ComplexMatrix {
    let m = eigvals_w.len();
    let mut out = ComplexMatrix::zeros(m * n, m * n);
    for j in 0..n {
        for (k, &l) in eigvals_w.iter().enumerate() {
            let i = j * m + k;
            out[(i, i)] = Complex64::new(1.0 + l * l, 0.0);
            if j + 1 < n {
                out[(i, i + m)] = Complex64::new(l, 0.0);
                out[(i + m, i)] = Complex64::new(l, 0.0);
            }
        }
    }
    out
}

/// A permutation of `0..len`, stored as the destination of each index:
/// applying it moves entry `i` to position `dest[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    dest: Vec<usize>,
}

impl Permutation {
    pub fn new(dest: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; dest.len()];
        for &d in &dest {
            if d >= dest.len() || std::mem::replace(&mut seen[d], true) {
                return Err(Error::InvalidParams(format!("{dest:?} is not a permutation")));
            }
        }
        Ok(Self { dest })
    }

    pub fn identity(len: usize) -> Self {
        Self { dest: (0..len).collect() }
    }

    pub fn len(&self) -> usize {
        self.dest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dest.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.dest.iter().enumerate().all(|(i, &d)| i == d)
    }

    pub fn destinations(&self) -> &[usize] {
        &self.dest
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.dest.len()];
        for (i, &d) in self.dest.iter().enumerate() {
            inv[d] = i;
        }
        Self { dest: inv }
    }

    /// `P v`: `out[dest[i]] = v[i]`.
    pub fn apply<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dest.len());
        let mut out = vec![T::default(); v.len()];
        for (i, &d) in self.dest.iter().enumerate() {
            out[d] = v[i];
        }
        out
    }

    /// `P^T v`: `out[i] = v[dest[i]]`.
    pub fn apply_inverse<T: Copy>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dest.len());
        self.dest.iter().map(|&d| v[d]).collect()
    }

    /// `P A P^T`: entry `(i, j)` of `A` lands at `(dest[i], dest[j])`.
    pub fn conjugate(&self, a: &ComplexMatrix) -> ComplexMatrix {
        assert!(a.is_square() && a.rows() == self.dest.len());
        let mut out = ComplexMatrix::zeros(a.rows(), a.cols());
        for (i, &di) in self.dest.iter().enumerate() {
            for (j, &dj) in self.dest.iter().enumerate() {
                out[(di, dj)] = a[(i, j)];
            }
        }
        out
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dest.len(), self.dest.len());
        for (i, &d) in self.dest.iter().enumerate() {
            out[(d, i)] = Complex64::new(1.0, 0.0);
        }
        out
    }
}

/// Perfect-shuffle (stride) permutation regrouping `n` blocks of size `m`
/// into `m` blocks of size `n`: flat index `j*m + k` moves to `k*n + j`.
pub fn shuffle_permutation(n: usize, m: usize) -> Permutation {
    assert!(n > 0 && m > 0, "shuffle needs positive block counts");
    let mut dest = vec![0; n * m];
    for j in 0..n {
        for k in 0..m {
            dest[j * m + k] = k * n + j;
        }
    }
    Permutation { dest }
}

/// Orthonormal eigenbasis of every symmetric tridiagonal Toeplitz matrix of
/// order `n`: `basis[j][i] = sqrt(2/(n+1)) sin((i+1)(j+1) pi / (n+1))`.
fn sine_basis(n: usize) -> Vec<f64> {
    let scale = (2.0 / (n as f64 + 1.0)).sqrt();
    let mut s = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let arg = ((i + 1) * (j + 1)) as f64 * PI / (n as f64 + 1.0);
            s[j * n + i] = scale * arg.sin();
        }
    }
    s
}

/// `lambda^2 + 2 lambda cos(theta) + 1`, evaluated as
/// `(lambda + cos)^2 + sin^2` so that it never cancels.
pub(crate) fn shifted_square(lambda: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    (lambda + c).powi(2) + s * s
}

/// Closed-form eigendecomposition of the Gram matrix for Hermitian `W`.
#[derive(Debug, Clone)]
pub struct HermitianFactorization {
    /// Eigenvalues of `W`, ascending.
    pub eigvals_w: Vec<f64>,
    /// Unitary eigenvectors of `W` (columns).
    pub u: ComplexMatrix,
    /// `block_eigs[j][k]` is the eigenvalue of `A` for sine mode `j + 1`
    /// and eigenvalue `k` of `W`.
    pub block_eigs: Vec<Vec<f64>>,
    /// Order of each tridiagonal Toeplitz block (the lag count `n`).
    pub sine_basis_dim: usize,
    w: ComplexMatrix,
    shuffle: Permutation,
    basis: Vec<f64>,
}

pub fn hermitian_factorization(spec: &DelaySpec) -> Result<HermitianFactorization> {
    let w = spec.w();
    if !spec.has_hermitian_weight() {
        return Err(Error::NotHermitian {
            defect: w.hermitian_defect().unwrap_or(f64::INFINITY),
        });
    }
    let eig = hermitian_eigen(w)?;
    let n = spec.n();
    let block_eigs = (1..=n)
        .map(|j| {
            let theta = j as f64 * PI / (n as f64 + 1.0);
            eig.values.iter().map(|&l| shifted_square(l, theta)).collect()
        })
        .collect();
    Ok(HermitianFactorization {
        eigvals_w: eig.values,
        u: eig.vectors,
        block_eigs,
        sine_basis_dim: n,
        w: w.clone(),
        shuffle: shuffle_permutation(n, spec.m()),
        basis: sine_basis(n),
    })
}

impl HermitianFactorization {
    pub fn n(&self) -> usize {
        self.sine_basis_dim
    }

    pub fn m(&self) -> usize {
        self.eigvals_w.len()
    }

    /// Eigenvalues of `A` as one ascending list.
    pub fn gram_eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.block_eigs.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn min_block_eig(&self) -> f64 {
        self.block_eigs.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// `x -> Ub P^T S diag(f(mu)) S P Ub* x`.
    fn apply_spectral(&self, x: &[Complex64], f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        let (n, m) = (self.n(), self.m());
        assert_eq!(x.len(), n * m);
        let u = &self.u;
        let mut rotated = vec![Complex64::new(0.0, 0.0); n * m];
        for j in 0..n {
            let block = &x[j * m..(j + 1) * m];
            for k in 0..m {
                rotated[j * m + k] = (0..m).map(|r| u[(r, k)].conj() * block[r]).sum();
            }
        }
        let mut grouped = self.shuffle.apply(&rotated);
        let mut coef = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..m {
            let t = &mut grouped[k * n..(k + 1) * n];
            for (j, c) in coef.iter_mut().enumerate() {
                let row = &self.basis[j * n..(j + 1) * n];
                let dot: Complex64 = row.iter().zip(t.iter()).map(|(&s, &v)| v * s).sum();
                *c = dot * f(self.block_eigs[j][k]);
            }
            for (i, ti) in t.iter_mut().enumerate() {
                *ti = coef
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| c * self.basis[j * n + i])
                    .sum();
            }
        }
        let back = self.shuffle.apply_inverse(&grouped);
        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for j in 0..n {
            let block = &back[j * m..(j + 1) * m];
            for r in 0..m {
                out[j * m + r] = (0..m).map(|k| u[(r, k)] * block[k]).sum();
            }
        }
        out
    }

    /// `A x` through the factorization.
    pub fn apply_gram(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply_spectral(x, |mu| mu)
    }

    /// `A^{-1} x` through the factorization.
    pub fn apply_gram_inverse(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_invertible()?;
        Ok(self.apply_spectral(x, |mu| 1.0 / mu))
    }

    fn check_invertible(&self) -> Result<()> {
        let lo = self.min_block_eig();
        if lo <= 1e-12 {
            let hi = self.block_eigs.iter().flatten().copied().fold(0.0, f64::max);
            return Err(Error::RankDeficient { ratio: (lo / hi).sqrt() });
        }
        Ok(())
    }

    /// Dense `A` rebuilt column by column from the factorization.
    pub fn reconstruct_gram(&self) -> ComplexMatrix {
        let d = self.n() * self.m();
        let mut out = ComplexMatrix::zeros(d, d);
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        for c in 0..d {
            e[c] = Complex64::new(1.0, 0.0);
            for (r, v) in self.apply_gram(&e).into_iter().enumerate() {
                out[(r, c)] = v;
            }
            e[c] = Complex64::new(0.0, 0.0);
        }
        out
    }

    /// `M* y` for the unsigned delay matrix.
    fn apply_delay_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let (n, m) = (self.n(), self.m());
        let mut out = vec![Complex64::new(0.0, 0.0); m * (n + 1)];
        for c in 0..=n {
            if c < n {
                out[c * m..(c + 1) * m].copy_from_slice(&y[c * m..(c + 1) * m]);
            }
            if c >= 1 {
                let prev = &y[(c - 1) * m..c * m];
                for r in 0..m {
                    // (W* prev)_r
                    let v: Complex64 = (0..m).map(|i| self.w[(i, r)].conj() * prev[i]).sum();
                    out[c * m + r] += v;
                }
            }
        }
        out
    }
}

/// `M^+ rhs = M* A^{-1} rhs` using the Hermitian factorization.
pub fn apply_fast_pinv(f: &HermitianFactorization, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = f.n() * f.m();
    if rhs.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has length {}, expected {d}",
            rhs.len()
        )));
    }
    let y = f.apply_gram_inverse(rhs)?;
    Ok(f.apply_delay_adjoint(&y))
}
