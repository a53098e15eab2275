#![allow(dead_code)]

use delaylab::experiments::rng_from_seed;
use delaylab::lrnn::{generate_signal, SignalKind, SignalParams};
use delaylab::Complex64;
use rand::Rng;

/// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues of a real symmetric tridiagonal matrix by Sturm bisection, ascending.
pub fn sturm_eigs(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    let radius = (0..n)
        .map(|i| {
            let l = if i > 0 { e[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { e[i].abs() } else { 0.0 };
            d[i].abs() + l + r
        })
        .fold(0.0, f64::max);
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if sturm_count(d, e, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Squared singular values of the scalar delay matrix via the real tridiagonal Gram.
pub fn scalar_gram_oracle(modulus: f64, n: usize) -> Vec<f64> {
    sturm_eigs(&vec![1.0 + modulus * modulus; n], &vec![modulus; n.saturating_sub(1)])
}

/// `1/2 log sum_{k=0}^n x^{2k}` summed directly.
pub fn power_sum_oracle(x: f64, n: usize) -> f64 {
    0.5 * (0..=n).map(|k| x.powi(2 * k as i32)).sum::<f64>().ln()
}

pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// max |a_i - b_i| / scale
pub fn max_rel(a: &[f64], b: &[f64], scale: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn complex_vector(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = rng_from_seed(seed);
    (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn noise(m: usize, t: usize, seed: u64) -> Vec<Vec<Complex64>> {
    generate_signal(SignalKind::WhiteNoise, m, t, seed, &SignalParams::default()).unwrap()
}

pub fn uniform(seed: u64, lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..k).map(|_| rng.gen_range(lo..hi)).collect()
}
