//! Deterministic conditioning, determinant and embedding bounds.
//!
//! Bounds on `S` (the generalized determinant) are returned as `log S`.
//! Unit singular values are detected with the absolute window
//! [`UNIT_WINDOW`].

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::delaymat::{build_delay_matrix, DelaySpec, WeightClass};
use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eigen, hermitian_eigenvalues, singular_values, spectral_norm, spectral_summary, ComplexMatrix,
    DEFAULT_RANK_TOL,
};
use crate::spectra::{validate_sing, UNIT_WINDOW};

/// Inequalities within this distance of holding count as holding.
pub const SLACK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaRegime {
    AwayFromUnit,
    AtUnit,
    GeneralHalf,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetRegime {
    Sub1,
    At1,
    Super1,
    NotApplicable,
}

impl fmt::Display for KappaRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for DetRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Outcome of the three sufficient conditions for full row rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVerdict {
    pub weak_ok: bool,
    pub case1_ok: bool,
    pub case2_ok: bool,
    pub guaranteed: bool,
    /// Largest slack among the conditions that apply to the input range;
    /// non-negative (up to [`SLACK_TOL`]) exactly when `guaranteed`.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kappa_bound: f64,
    pub kappa_regime: KappaRegime,
    pub det_bound_log: f64,
    pub det_regime: DetRegime,
    pub embedding: EmbeddingVerdict,
}

fn is_unit(x: f64) -> bool {
    (x - 1.0).abs() <= UNIT_WINDOW
}

/// Upper bound on `kappa(M_n)` for scalar `omega`.
pub fn scalar_cond_bound(omega: Complex64, n: usize) -> f64 {
    let x = omega.norm();
    if is_unit(x) {
        2.0 / PI * (n + 1) as f64
    } else {
        ((x + 1.0) / (x - 1.0)).abs()
    }
}

/// Upper bound on `log S(M_n)` for scalar `omega`.
pub fn scalar_det_bound(omega: Complex64, n: usize) -> f64 {
    let x = omega.norm();
    if is_unit(x) {
        0.5 * ((n + 1) as f64).ln()
    } else if x < 1.0 {
        -0.5 * (-x * x).ln_1p()
    } else {
        n as f64 * x.ln() - 0.5 * (-1.0 / (x * x)).ln_1p()
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn hermitian_cond_with_regime(sing_w: &[f64], n: usize) -> (f64, KappaRegime) {
    let smax = max_of(sing_w);
    if sing_w.iter().any(|&s| is_unit(s)) {
        ((n + 1) as f64 / PI * (smax + 1.0), KappaRegime::AtUnit)
    } else {
        let gap = sing_w.iter().map(|&s| (s - 1.0).abs()).fold(f64::INFINITY, f64::min);
        ((smax + 1.0) / gap, KappaRegime::AwayFromUnit)
    }
}

/// Upper bound on `kappa(M_{n,m})` for Hermitian `W` with singular values `sing_w`.
pub fn hermitian_cond_bound(sing_w: &[f64], n: usize) -> Result<f64> {
    validate_sing(sing_w)?;
    Ok(hermitian_cond_with_regime(sing_w, n).0)
}

fn hermitian_det_with_regime(sing_w: &[f64], n: usize) -> (f64, DetRegime) {
    let m = sing_w.len() as f64;
    let smax = max_of(sing_w);
    if is_unit(smax) {
        (m / 2.0 * ((n + 1) as f64).ln(), DetRegime::At1)
    } else if smax < 1.0 {
        (-m / 2.0 * (-smax * smax).ln_1p(), DetRegime::Sub1)
    } else {
        (m / 2.0 * (n as f64).ln() + n as f64 * m * smax.ln(), DetRegime::Super1)
    }
}

/// Upper bound on `log S(M_{n,m})` for Hermitian `W` with singular values `sing_w`.
pub fn hermitian_det_bound(sing_w: &[f64], n: usize) -> Result<f64> {
    validate_sing(sing_w)?;
    Ok(hermitian_det_with_regime(sing_w, n).0)
}

/// Lower bound on `sigma_min` demanded by the sub-unit refined condition.
pub fn case1_threshold(sigma_max: f64) -> f64 {
    let s = sigma_max;
    let num = s * s * s - s * s + 2.0 * s - 1.0;
    let den = s * s - s + 1.0;
    (num / den).max(0.0).sqrt()
}

/// Sufficient conditions for `M_{n,m}` to have full row rank, given the
/// extreme singular values of `W`.
pub fn embedding_condition(sigma_min: f64, sigma_max: f64) -> Result<EmbeddingVerdict> {
    if !(sigma_min.is_finite() && sigma_max.is_finite()) || sigma_min < 0.0 || sigma_min > sigma_max {
        return Err(Error::InvalidRange { sigma_min, sigma_max });
    }
    let weak = 0.5 * (1.0 + sigma_min * sigma_min) - sigma_max;
    let case1 = (sigma_max <= 1.0).then(|| sigma_min - case1_threshold(sigma_max));
    let case2 = (sigma_min >= 1.0).then(|| sigma_min * sigma_min - sigma_min + 1.0 - sigma_max);
    let ok = |s: Option<f64>| s.is_some_and(|s| s >= -SLACK_TOL);
    let weak_ok = ok(Some(weak));
    let case1_ok = ok(case1);
    let case2_ok = ok(case2);
    let margin = [Some(weak), case1, case2].into_iter().flatten().fold(f64::NEG_INFINITY, f64::max);
    Ok(EmbeddingVerdict {
        weak_ok,
        case1_ok,
        case2_ok,
        guaranteed: sigma_max == 0.0 || weak_ok || case1_ok || case2_ok,
        margin,
    })
}

/// `(||(I + W W*)^{-1} W||, ||(I + W W*)^{-1} W*||)`.
pub fn dominance_terms(w: &ComplexMatrix) -> Result<(f64, f64)> {
    if !w.is_square() {
        return Err(Error::DimensionMismatch(format!("W must be square, got {}x{}", w.rows(), w.cols())));
    }
    let m = w.rows();
    let g = ComplexMatrix::identity(m).add(&w.gram_rows())?;
    let eig = hermitian_eigen(&g)?;
    let v = &eig.vectors;
    let mut inv = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            inv[(i, j)] = (0..m).map(|k| v[(i, k)] * v[(j, k)].conj() / eig.values[k]).sum();
        }
    }
    let first = spectral_norm(&inv.matmul(w)?)?;
    let second = spectral_norm(&inv.matmul(&w.adjoint())?)?;
    Ok((first, second))
}

/// Upper bound on `sigma_max(M_{n,m})`.
pub fn general_smax_bound(sigma_max_w: f64) -> f64 {
    sigma_max_w + 1.0
}

/// Upper bound on `kappa(M_{n,m})` for arbitrary `W` with `sigma_max < 1/2`.
pub fn general_cond_bound(sigma_min_w: f64, sigma_max_w: f64) -> Result<f64> {
    if !(sigma_min_w.is_finite() && sigma_max_w.is_finite()) || sigma_min_w < 0.0 || sigma_min_w > sigma_max_w {
        return Err(Error::InvalidRange { sigma_min: sigma_min_w, sigma_max: sigma_max_w });
    }
    if sigma_max_w >= 0.5 {
        return Err(Error::OutOfRegime { sigma_max: sigma_max_w });
    }
    let s = sigma_max_w;
    let num = 1.0 + 2.0 * s + s * s;
    let den = 1.0 - 2.0 * s + sigma_min_w * sigma_min_w;
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagMonotonicity {
    pub sigma_min_drop: bool,
    pub sigma_max_rise: bool,
    pub kappa_rise: bool,
}

impl LagMonotonicity {
    pub fn all(&self) -> bool {
        self.sigma_min_drop && self.sigma_max_rise && self.kappa_rise
    }
}

/// Checks that going from `n1` to `n2 >= n1` lags cannot improve conditioning.
pub fn lag_monotonicity_check(w: &ComplexMatrix, n1: usize, n2: usize) -> Result<LagMonotonicity> {
    if n1 == 0 || n1 > n2 {
        return Err(Error::InvalidParams(format!("need 1 <= n1 <= n2, got n1 = {n1}, n2 = {n2}")));
    }
    let s1 = spectral_summary(&build_delay_matrix(&DelaySpec::infer(n1, w.clone())?), DEFAULT_RANK_TOL)?;
    let s2 = spectral_summary(&build_delay_matrix(&DelaySpec::infer(n2, w.clone())?), DEFAULT_RANK_TOL)?;
    let tol = |a: f64, b: f64| 1e-9 * a.abs().max(b.abs()).max(1.0);
    Ok(LagMonotonicity {
        sigma_min_drop: s2.sigma_min <= s1.sigma_min + tol(s1.sigma_min, s2.sigma_min),
        sigma_max_rise: s1.sigma_max <= s2.sigma_max + tol(s1.sigma_max, s2.sigma_max),
        kappa_rise: s1.kappa <= s2.kappa + tol(s1.kappa, s2.kappa),
    })
}

/// Report for arbitrary `W` known only through its extreme singular values.
pub fn bounds_from_extremes(sigma_min: f64, sigma_max: f64) -> Result<BoundReport> {
    let embedding = embedding_condition(sigma_min, sigma_max)?;
    let (kappa_bound, kappa_regime) = match general_cond_bound(sigma_min, sigma_max) {
        Ok(k) => (k, KappaRegime::GeneralHalf),
        Err(Error::OutOfRegime { .. }) => (f64::INFINITY, KappaRegime::NotApplicable),
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        kappa_bound,
        kappa_regime,
        det_bound_log: f64::INFINITY,
        det_regime: DetRegime::NotApplicable,
        embedding,
    })
}

/// Report for Hermitian `W` with the given singular values.
pub fn bounds_for_hermitian(sing_w: &[f64], n: usize) -> Result<BoundReport> {
    validate_sing(sing_w)?;
    let (kappa_bound, kappa_regime) = hermitian_cond_with_regime(sing_w, n);
    let (det_bound_log, det_regime) = hermitian_det_with_regime(sing_w, n);
    Ok(BoundReport {
        kappa_bound,
        kappa_regime,
        det_bound_log,
        det_regime,
        embedding: embedding_condition(min_of(sing_w), max_of(sing_w))?,
    })
}

/// Every applicable bound for a spec, chosen by its weight class.
pub fn bounds_for_spec(spec: &DelaySpec) -> Result<BoundReport> {
    let n = spec.n();
    match spec.class() {
        WeightClass::Scalar => {
            let omega = spec.omega().expect("scalar class has m = 1");
            let x = omega.norm();
            let unit = is_unit(x);
            Ok(BoundReport {
                kappa_bound: scalar_cond_bound(omega, n),
                kappa_regime: if unit { KappaRegime::AtUnit } else { KappaRegime::AwayFromUnit },
                det_bound_log: scalar_det_bound(omega, n),
                det_regime: if unit {
                    DetRegime::At1
                } else if x < 1.0 {
                    DetRegime::Sub1
                } else {
                    DetRegime::Super1
                },
                embedding: embedding_condition(x, x)?,
            })
        }
        WeightClass::Hermitian | WeightClass::Zero => {
            let sing: Vec<f64> = hermitian_eigenvalues(spec.w())?.iter().map(|l| l.abs()).collect();
            bounds_for_hermitian(&sing, n)
        }
        WeightClass::General | WeightClass::Unitary => {
            let s = singular_values(spec.w())?;
            bounds_from_extremes(s[s.len() - 1], s[0])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn scalar_cond_examples() {
        assert_eq!(scalar_cond_bound(c(0.0), 5), 1.0);
        assert!((scalar_cond_bound(c(0.5), 5) - 3.0).abs() < 1e-15);
        assert!((scalar_cond_bound(Complex64::new(0.0, 1.0), 3) - 8.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn scalar_det_examples() {
        assert_eq!(scalar_det_bound(c(0.0), 4), 0.0);
        assert!((scalar_det_bound(c(1.0), 3) - 0.5 * 4f64.ln()).abs() < 1e-15);
        assert!((scalar_det_bound(c(0.5), 2).exp() - 1.0 / 0.75f64.sqrt()).abs() < 1e-14);
        // |omega| = 2, n = 3: 3 log 2 - 1/2 log(3/4)
        assert!((scalar_det_bound(c(2.0), 3) - (3.0 * 2f64.ln() - 0.5 * 0.75f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn hermitian_examples() {
        assert_eq!(hermitian_cond_bound(&[0.0, 0.0, 0.0], 4).unwrap(), 1.0);
        assert!((hermitian_cond_bound(&[0.5, 0.25], 4).unwrap() - 3.0).abs() < 1e-15);
        for x in [0.2, 0.9, 1.3] {
            assert_eq!(hermitian_cond_bound(&[x], 6).unwrap(), scalar_cond_bound(c(x), 6));
        }
        // (n+1)/pi (1+1) and (2/pi)(n+1) agree at m = 1
        assert!((hermitian_cond_bound(&[1.0], 6).unwrap() - scalar_cond_bound(c(1.0), 6)).abs() < 1e-14);
        assert_eq!(hermitian_det_bound(&[0.0, 0.0], 3).unwrap(), 0.0);
        assert!((hermitian_det_bound(&[1.0, 1.0], 3).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!((hermitian_det_bound(&[0.5, 0.5], 8).unwrap() + 0.75f64.ln()).abs() < 1e-15);
        assert!(hermitian_det_bound(&[], 3).is_err());
    }

    #[test]
    fn embedding_examples() {
        let v = embedding_condition(1.0, 1.0).unwrap();
        assert!(v.guaranteed && v.weak_ok && v.case1_ok && v.case2_ok);
        assert!(v.margin.abs() < 1e-15);
        let v = embedding_condition(0.0, 0.4).unwrap();
        assert!(v.guaranteed && v.weak_ok);
        let v = embedding_condition(0.0, 0.6).unwrap();
        assert!(!v.guaranteed && !v.case1_ok && v.margin < 0.0);
        assert!((case1_threshold(0.6) - 0.2714).abs() < 1e-4);
        assert!(embedding_condition(0.0, 0.0).unwrap().guaranteed);
        assert!(embedding_condition(0.5, 0.4).is_err());
        assert!(embedding_condition(-0.1, 0.4).is_err());
        let v = embedding_condition(1.5, 1.75).unwrap();
        assert!(v.case2_ok && !v.weak_ok && !v.case1_ok);
    }

    #[test]
    fn weak_boundary_is_above_diagonal() {
        for i in 0..=400 {
            let s = i as f64 / 100.0;
            let gap = 0.5 * (1.0 + s * s) - s;
            assert!(gap >= 0.0);
            if i != 100 {
                assert!(gap > 0.0);
            }
        }
    }

    #[test]
    fn dominance_examples() {
        assert_eq!(dominance_terms(&ComplexMatrix::zeros(3, 3)).unwrap(), (0.0, 0.0));
        let w = ComplexMatrix::diagonal(&[c(1.0), c(0.3)]);
        let (first, _) = dominance_terms(&w).unwrap();
        assert!((first - 0.5).abs() < 1e-14);
        assert!(dominance_terms(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn general_examples() {
        assert_eq!(general_smax_bound(0.0), 1.0);
        assert_eq!(general_smax_bound(0.7), 1.7);
        assert_eq!(general_cond_bound(0.0, 0.0).unwrap(), 1.0);
        assert!((general_cond_bound(0.0, 0.4).unwrap() - (1.96f64 / 0.2).sqrt()).abs() < 1e-14);
        assert!(matches!(general_cond_bound(0.1, 0.5), Err(Error::OutOfRegime { .. })));
    }

    #[test]
    fn lag_examples() {
        let r = lag_monotonicity_check(&ComplexMatrix::zeros(2, 2), 1, 5).unwrap();
        assert!(r.all());
        let r = lag_monotonicity_check(&ComplexMatrix::scalar(c(1.0)), 1, 2).unwrap();
        assert!(r.all());
        assert!(lag_monotonicity_check(&ComplexMatrix::scalar(c(1.0)), 3, 2).is_err());
    }

    #[test]
    fn report_by_class() {
        let r = bounds_for_spec(&DelaySpec::scalar(c(0.5), 3).unwrap()).unwrap();
        assert_eq!(r.kappa_regime, KappaRegime::AwayFromUnit);
        assert_eq!(r.det_regime, DetRegime::Sub1);
        assert!((r.kappa_bound - 3.0).abs() < 1e-15);

        let rot = ComplexMatrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        let r = bounds_for_spec(&DelaySpec::infer(3, rot).unwrap()).unwrap();
        assert_eq!(r.kappa_regime, KappaRegime::NotApplicable);
        assert!(r.kappa_bound.is_infinite() && r.embedding.guaranteed);

        let h = ComplexMatrix::diagonal(&[c(-1.0), c(0.5)]);
        let r = bounds_for_spec(&DelaySpec::infer(3, h).unwrap()).unwrap();
        assert_eq!(r.kappa_regime, KappaRegime::AtUnit);
        assert_eq!(r.det_regime, DetRegime::At1);
    }
}
