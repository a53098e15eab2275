//! Seeded random weight matrices.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{spectral_norm, ComplexMatrix};

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed from the master seed, cell index and sample index.
pub fn derived_seed(seed: u64, cell: u64, sample: u64) -> u64 {
    mix(mix(mix(seed) ^ cell) ^ sample)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_real(m: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let entries = (0..m * m).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect();
    ComplexMatrix::new(m, m, entries).expect("finite Gaussian entries")
}

fn gaussian_complex(m: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let entries = (0..m * m)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    ComplexMatrix::new(m, m, entries).expect("finite Gaussian entries")
}

/// Orthonormalizes the columns of a square matrix (modified Gram-Schmidt,
/// two passes).
fn orthonormalize(a: &ComplexMatrix) -> ComplexMatrix {
    let m = a.rows();
    let mut cols: Vec<Vec<Complex64>> = (0..m).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    for j in 0..m {
        for _ in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[i];
                let proj: Complex64 = q.iter().zip(rest[0].iter()).map(|(x, y)| x.conj() * y).sum();
                for (y, x) in rest[0].iter_mut().zip(q) {
                    *y -= proj * x;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= norm);
    }
    let mut out = ComplexMatrix::zeros(m, m);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            out[(i, j)] = z;
        }
    }
    out
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParams("m must be positive".into()));
    }
    Ok(())
}

/// Real Gaussian `m x m` matrix rescaled to spectral norm `target`.
pub fn random_weight_with_norm(m: usize, target: f64, seed: u64) -> Result<ComplexMatrix> {
    check_m(m)?;
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::InvalidParams(format!("target spectral norm {target} must be finite and non-negative")));
    }
    if target == 0.0 {
        return Ok(ComplexMatrix::zeros(m, m));
    }
    let g = gaussian_real(m, &mut rng_from_seed(seed));
    let norm = spectral_norm(&g)?;
    Ok(g.scale(Complex64::new(target / norm, 0.0)))
}

/// Random orthogonal (real) or unitary (complex) matrix.
pub fn random_unitary(m: usize, complex: bool, seed: u64) -> Result<ComplexMatrix> {
    check_m(m)?;
    let mut rng = rng_from_seed(seed);
    let g = if complex { gaussian_complex(m, &mut rng) } else { gaussian_real(m, &mut rng) };
    Ok(orthonormalize(&g))
}

/// `U diag(sigmas) V*` with seeded random real orthogonal `U`, `V`.
pub fn random_weight_with_spectrum(sigmas: &[f64], seed: u64) -> Result<ComplexMatrix> {
    let m = sigmas.len();
    check_m(m)?;
    if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::InvalidParams("singular values must be finite and non-negative".into()));
    }
    let u = random_unitary(m, false, seed)?;
    let v = random_unitary(m, false, seed ^ 0xA5A5_A5A5_A5A5_A5A5)?;
    let d: Vec<Complex64> = sigmas.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    u.matmul(&ComplexMatrix::diagonal(&d))?.matmul(&v.adjoint())
}

/// `Q diag(eigvals) Q*` with a seeded random unitary `Q` (complex when asked).
pub fn random_hermitian(eigvals: &[f64], complex: bool, seed: u64) -> Result<ComplexMatrix> {
    let m = eigvals.len();
    check_m(m)?;
    let q = random_unitary(m, complex, seed)?;
    let d: Vec<Complex64> = eigvals.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    let h = q.matmul(&ComplexMatrix::diagonal(&d))?.matmul(&q.adjoint())?;
    // Symmetrize so the result is Hermitian to the last bit.
    let adj = h.adjoint();
    let entries = h.entries().iter().zip(adj.entries()).map(|(a, b)| (a + b) / 2.0).collect();
    ComplexMatrix::new(m, m, entries)
}

/// Weight families compared in the singular-value distribution experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WClass {
    Zero,
    Identity,
    Unitary,
    Gaussian,
}

impl WClass {
    pub const ALL: [WClass; 4] = [WClass::Zero, WClass::Identity, WClass::Unitary, WClass::Gaussian];
}

impl fmt::Display for WClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WClass::Zero => "zero",
            WClass::Identity => "identity",
            WClass::Unitary => "unitary",
            WClass::Gaussian => "gaussian",
        })
    }
}

impl FromStr for WClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(WClass::Zero),
            "identity" => Ok(WClass::Identity),
            "unitary" => Ok(WClass::Unitary),
            "gaussian" => Ok(WClass::Gaussian),
            other => Err(Error::Parse(format!("unknown weight family '{other}'"))),
        }
    }
}

/// Zero and identity are exact; unitary is an orthonormalized Gaussian and
/// ignores `target`; Gaussian is [`random_weight_with_norm`].
pub fn random_weight_class(m: usize, class: WClass, target: f64, seed: u64) -> Result<ComplexMatrix> {
    check_m(m)?;
    match class {
        WClass::Zero => Ok(ComplexMatrix::zeros(m, m)),
        WClass::Identity => Ok(ComplexMatrix::identity(m)),
        WClass::Unitary => random_unitary(m, false, seed),
        WClass::Gaussian => random_weight_with_norm(m, target, seed),
    }
}
