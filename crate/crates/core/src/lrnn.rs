//! The linear recurrence `h[k+1] = W h[k] + y[k] + b`, its delay-coordinate
//! vectors and the block system linking them.
//!
//! For lag count `n` and step `k` (with `n <= k <= T`):
//!
//! ```text
//! phi = [y[k-1]; y[k-2]; ...; y[k-n]]          (length m n)
//! psi = [h[k];   h[k-1]; ...; h[k-n]]          (length m (n+1))
//! ```
//!
//! and row block `l` of the signed delay matrix reads
//! `h[k-l] - W h[k-l-1] = y[k-l-1] + b`, i.e. `M psi = phi + 1 (x) b`.

use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::delaymat::{build_signed_delay_matrix, DelaySpec};
use crate::error::{Error, Result};
use crate::experiments::{random_weight_with_norm, rng_from_seed};
use crate::matcore::{pseudo_inverse, ComplexMatrix};

type CVec = Vec<Complex64>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceConfig {
    pub w: ComplexMatrix,
    pub b: CVec,
    pub h0: CVec,
}

impl RecurrenceConfig {
    pub fn new(w: ComplexMatrix, b: CVec, h0: CVec) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::DimensionMismatch(format!("W must be square, got {}x{}", w.rows(), w.cols())));
        }
        let m = w.rows();
        if b.len() != m || h0.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "bias and initial state must have length {m}, got {} and {}",
                b.len(),
                h0.len()
            )));
        }
        Ok(Self { w, b, h0 })
    }

    /// Zero bias and zero initial state.
    pub fn unbiased(w: ComplexMatrix) -> Self {
        let m = w.rows();
        Self { w, b: vec![zero(); m], h0: vec![zero(); m] }
    }

    pub fn m(&self) -> usize {
        self.w.rows()
    }
}

/// Inputs `y[0..T]` and states `h[0..=T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub inputs: Vec<CVec>,
    pub states: Vec<CVec>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn m(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    /// Largest `|h[k+1] - (W h[k] + y[k] + b)|` over the trace.
    pub fn max_step_residual(&self, cfg: &RecurrenceConfig) -> f64 {
        let mut worst = 0.0f64;
        for (k, y) in self.inputs.iter().enumerate() {
            let next = step(cfg, &self.states[k], y);
            for (a, b) in next.iter().zip(&self.states[k + 1]) {
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    /// CSV with columns `step,channel,re_y,im_y,re_h,im_h`. The final step
    /// has a state but no input, so its `y` fields are empty.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "step,channel,re_y,im_y,re_h,im_h")?;
        for (k, h) in self.states.iter().enumerate() {
            for (c, hc) in h.iter().enumerate() {
                match self.inputs.get(k) {
                    Some(y) => writeln!(out, "{k},{c},{},{},{},{}", y[c].re, y[c].im, hc.re, hc.im)?,
                    None => writeln!(out, "{k},{c},,,{},{}", hc.re, hc.im)?,
                }
            }
        }
        Ok(())
    }

    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut rows: Vec<(usize, usize, Option<Complex64>, Complex64)> = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if i == 0 || line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("trace line {}: expected 6 fields, got {}", i + 1, f.len())));
            }
            let int = |s: &str| usize::from_str(s).map_err(|e| Error::Parse(format!("trace line {}: {e}", i + 1)));
            let real = |s: &str| f64::from_str(s).map_err(|e| Error::Parse(format!("trace line {}: {e}", i + 1)));
            let y = if f[2].is_empty() && f[3].is_empty() {
                None
            } else {
                Some(Complex64::new(real(f[2])?, real(f[3])?))
            };
            rows.push((int(f[0])?, int(f[1])?, y, Complex64::new(real(f[4])?, real(f[5])?)));
        }
        let steps = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
        let m = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
        if steps == 0 || rows.len() != steps * m {
            return Err(Error::Parse(format!("trace has {} rows, expected steps x channels = {}", rows.len(), steps * m)));
        }
        let mut states = vec![vec![zero(); m]; steps];
        let mut inputs = vec![vec![zero(); m]; steps - 1];
        let mut seen = vec![false; steps * m];
        for (k, c, y, h) in rows {
            if std::mem::replace(&mut seen[k * m + c], true) {
                return Err(Error::Parse(format!("duplicate trace entry at step {k}, channel {c}")));
            }
            states[k][c] = h;
            match (y, k + 1 < steps) {
                (Some(y), true) => inputs[k][c] = y,
                (None, false) => {}
                (Some(_), false) => return Err(Error::Parse("final step must not carry an input".into())),
                (None, true) => return Err(Error::Parse(format!("missing input at step {k}, channel {c}"))),
            }
        }
        Ok(Self { inputs, states })
    }
}

fn step(cfg: &RecurrenceConfig, h: &[Complex64], y: &[Complex64]) -> CVec {
    let m = cfg.m();
    (0..m)
        .map(|r| {
            let wh: Complex64 = (0..m).map(|c| cfg.w[(r, c)] * h[c]).sum();
            wh + y[r] + cfg.b[r]
        })
        .collect()
}

/// Runs the recurrence over `inputs`, starting from `cfg.h0`.
pub fn run_recurrence(cfg: &RecurrenceConfig, inputs: &[CVec]) -> Result<Trace> {
    let m = cfg.m();
    if let Some((k, y)) = inputs.iter().enumerate().find(|(_, y)| y.len() != m) {
        return Err(Error::DimensionMismatch(format!("input {k} has length {}, expected {m}", y.len())));
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(cfg.h0.clone());
    for y in inputs {
        let next = step(cfg, states.last().expect("non-empty"), y);
        states.push(next);
    }
    Ok(Trace { inputs: inputs.to_vec(), states })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayVectors {
    pub k: usize,
    pub n: usize,
    pub phi: CVec,
    pub psi: CVec,
}

/// Stacks `phi` and `psi` at step `k` for `n` lags.
pub fn assemble_delay_vectors(trace: &Trace, k: usize, n: usize) -> Result<DelayVectors> {
    if n == 0 {
        return Err(Error::InvalidParams("number of lags must be positive".into()));
    }
    if k < n {
        return Err(Error::IndexOutOfRange { index: k, reason: format!("step must be at least n = {n}") });
    }
    if k > trace.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            reason: format!("trace has only {} inputs", trace.len()),
        });
    }
    let phi = (1..=n).flat_map(|l| trace.inputs[k - l].iter().copied()).collect();
    let psi = (0..=n).flat_map(|l| trace.states[k - l].iter().copied()).collect();
    Ok(DelayVectors { k, n, phi, psi })
}

/// `phi + 1 (x) b`.
pub fn shifted_rhs(phi: &[Complex64], b: &[Complex64]) -> Result<CVec> {
    if b.is_empty() || phi.len() % b.len() != 0 {
        return Err(Error::DimensionMismatch(format!(
            "phi length {} is not a multiple of bias length {}",
            phi.len(),
            b.len()
        )));
    }
    Ok(phi.iter().enumerate().map(|(i, &p)| p + b[i % b.len()]).collect())
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `||M psi - (phi + 1 (x) b)||_inf` for the signed delay matrix.
pub fn verify_delay_relation(spec: &DelaySpec, cfg: &RecurrenceConfig, dv: &DelayVectors) -> Result<f64> {
    let (n, m) = (spec.n(), spec.m());
    if cfg.m() != m || dv.phi.len() != m * n || dv.psi.len() != m * (n + 1) {
        return Err(Error::DimensionMismatch(format!(
            "spec (n={n}, m={m}) does not match config m={} / vectors ({}, {})",
            cfg.m(),
            dv.phi.len(),
            dv.psi.len()
        )));
    }
    let lhs = build_signed_delay_matrix(spec).mul_vec(&dv.psi)?;
    let rhs = shifted_rhs(&dv.phi, &cfg.b)?;
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

/// How the free trailing block of `psi` is fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum Reconstruction {
    /// Minimum-norm solution `M^+ (phi + 1 (x) b)`.
    MinNorm,
    /// The oldest state `h[k-n]` is taken as given and the rest follows by
    /// back substitution.
    PinnedTail(CVec),
}

/// Solves `M psi = phi + 1 (x) b` for `psi`.
pub fn reconstruct(spec: &DelaySpec, phi: &[Complex64], b: &[Complex64], mode: &Reconstruction) -> Result<CVec> {
    let (n, m) = (spec.n(), spec.m());
    if phi.len() != m * n || b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "phi must have length {} and b length {m}, got {} and {}",
            m * n,
            phi.len(),
            b.len()
        )));
    }
    let rhs = shifted_rhs(phi, b)?;
    match mode {
        Reconstruction::MinNorm => pseudo_inverse(&build_signed_delay_matrix(spec))?.mul_vec(&rhs),
        Reconstruction::PinnedTail(tail) => {
            if tail.len() != m {
                return Err(Error::DimensionMismatch(format!("pinned tail must have length {m}")));
            }
            let w = spec.w();
            let mut psi = vec![zero(); m * (n + 1)];
            psi[m * n..].copy_from_slice(tail);
            for l in (0..n).rev() {
                for r in 0..m {
                    let wh: Complex64 = (0..m).map(|c| w[(r, c)] * psi[(l + 1) * m + c]).sum();
                    psi[l * m + r] = rhs[l * m + r] + wh;
                }
            }
            Ok(psi)
        }
    }
}

/// Minimum-norm reconstruction.
pub fn reconstruct_min_norm(spec: &DelaySpec, phi: &[Complex64], b: &[Complex64]) -> Result<CVec> {
    reconstruct(spec, phi, b, &Reconstruction::MinNorm)
}

/// Diagnostics for one step of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    /// `||M psi - rhs||_inf` for the true `psi`.
    pub relation_residual: f64,
    /// `||M psi_hat - rhs||_inf` for the minimum-norm `psi_hat`.
    pub solve_residual: f64,
    /// `||psi_hat - psi||_inf`: the null-space component of the true state.
    pub null_space_gap: f64,
}

pub fn reconstruction_report(spec: &DelaySpec, cfg: &RecurrenceConfig, dv: &DelayVectors) -> Result<ReconstructionReport> {
    let relation_residual = verify_delay_relation(spec, cfg, dv)?;
    let psi_hat = reconstruct_min_norm(spec, &dv.phi, &cfg.b)?;
    let m = build_signed_delay_matrix(spec);
    let rhs = shifted_rhs(&dv.phi, &cfg.b)?;
    let lhs = m.mul_vec(&psi_hat)?;
    let solve_residual = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let diff: CVec = psi_hat.iter().zip(&dv.psi).map(|(a, b)| a - b).collect();
    Ok(ReconstructionReport { relation_residual, solve_residual, null_space_gap: inf_norm(&diff) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Sine,
    LinearSystem,
    WhiteNoise,
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sine" => Ok(SignalKind::Sine),
            "linear-system" | "linear" => Ok(SignalKind::LinearSystem),
            "white-noise" | "noise" => Ok(SignalKind::WhiteNoise),
            other => Err(Error::Parse(format!("unknown signal kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    /// Base frequency in cycles per step; channel `c` uses `(c + 1) * freq`.
    pub freq: f64,
    pub amplitude: f64,
    /// Spectral norm of the linear-system map.
    pub spectral_radius: f64,
    /// Standard deviation of the linear-system driving noise.
    pub noise: f64,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self { freq: 0.05, amplitude: 1.0, spectral_radius: 0.9, noise: 0.1 }
    }
}

/// Deterministic test signal of `t` vectors of length `m`.
pub fn generate_signal(kind: SignalKind, m: usize, t: usize, seed: u64, params: &SignalParams) -> Result<Vec<CVec>> {
    if m == 0 || t == 0 {
        return Err(Error::InvalidParams(format!("signal needs m >= 1 and T >= 1, got m = {m}, T = {t}")));
    }
    let p = params;
    if ![p.freq, p.amplitude, p.spectral_radius, p.noise].iter().all(|x| x.is_finite()) || p.noise < 0.0 {
        return Err(Error::InvalidParams("signal parameters must be finite, noise non-negative".into()));
    }
    let mut rng = rng_from_seed(seed);
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    match kind {
        SignalKind::Sine => {
            let phases: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            Ok((0..t)
                .map(|k| {
                    (0..m)
                        .map(|c| {
                            let arg = std::f64::consts::TAU * p.freq * (c + 1) as f64 * k as f64 + phases[c];
                            Complex64::new(p.amplitude * arg.cos(), 0.0)
                        })
                        .collect()
                })
                .collect())
        }
        SignalKind::WhiteNoise => Ok((0..t)
            .map(|_| (0..m).map(|_| Complex64::new(p.amplitude * gauss(&mut rng), 0.0)).collect())
            .collect()),
        SignalKind::LinearSystem => {
            if p.spectral_radius < 0.0 || p.spectral_radius >= 1.0 {
                return Err(Error::InvalidParams(format!(
                    "linear system needs spectral radius in [0, 1), got {}",
                    p.spectral_radius
                )));
            }
            let a = random_weight_with_norm(m, p.spectral_radius, rng.gen())?;
            let mut x: CVec = (0..m).map(|_| Complex64::new(p.amplitude * gauss(&mut rng), 0.0)).collect();
            let mut out = Vec::with_capacity(t);
            for _ in 0..t {
                out.push(x.clone());
                let ax = a.mul_vec(&x)?;
                x = ax.iter().map(|&v| v + p.noise * gauss(&mut rng)).collect();
            }
            Ok(out)
        }
    }
}
