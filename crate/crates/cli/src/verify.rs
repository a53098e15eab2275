use delaylab::bounds::{bounds_for_spec, dominance_terms, lag_monotonicity_check, DetRegime, KappaRegime};
use delaylab::delaymat::{
    apply_fast_pinv, build_delay_matrix, build_gram, build_signed_delay_matrix, hermitian_factorization, DelaySpec,
};
use delaylab::lrnn::{
    assemble_delay_vectors, generate_signal, reconstruct_min_norm, run_recurrence, shifted_rhs, RecurrenceConfig,
    SignalKind, SignalParams,
};
use delaylab::matcore::{
    hermitian_eigenvalues, hermitian_log_abs_det, pseudo_inverse, singular_values, spectral_summary, DEFAULT_RANK_TOL,
};
use delaylab::spectra::{hermitian_gen_det, scalar_gen_det};
use delaylab::{Complex64, Result};

use crate::report::closed_form_singular_values;
use crate::{CliResult, Failure};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_vector(len: usize, seed: u64) -> Result<Vec<Complex64>> {
    let re = generate_signal(SignalKind::WhiteNoise, len, 1, seed, &SignalParams::default())?;
    let im = generate_signal(SignalKind::WhiteNoise, len, 1, seed ^ 0xFFFF, &SignalParams::default())?;
    Ok(re[0].iter().zip(&im[0]).map(|(a, b)| Complex64::new(a.re, b.re)).collect())
}

fn collect(spec: &DelaySpec, seed: u64) -> Result<Vec<Check>> {
    let (n, m) = (spec.n(), spec.m());
    let mut out = Vec::new();
    let delay = build_delay_matrix(spec);
    let summary = spectral_summary(&delay, DEFAULT_RANK_TOL)?;
    let sw = singular_values(spec.w())?;

    if let Some(closed) = closed_form_singular_values(spec)? {
        let dev = closed
            .iter()
            .zip(&summary.singular_values)
            .map(|(a, b)| (a - b).abs() / summary.sigma_max)
            .fold(0.0, f64::max);
        out.push(check("closed-form singular values", dev <= 1e-10, format!("max rel deviation {dev:e}")));

        let exact = match spec.omega() {
            Some(omega) => scalar_gen_det(omega, n),
            None => {
                let s: Vec<f64> = hermitian_eigenvalues(spec.w())?.iter().map(|l| l.abs()).collect();
                hermitian_gen_det(&s, n)?
            }
        };
        let numeric = 0.5 * hermitian_log_abs_det(&build_gram(spec))?;
        let d = (exact - numeric).abs();
        out.push(check("closed-form generalized determinant", d <= 1e-8, format!("|diff| {d:e}")));
    }

    if spec.has_hermitian_weight() {
        let f = hermitian_factorization(spec)?;
        let d = f.reconstruct_gram().max_abs_diff(&build_gram(spec));
        out.push(check("factorized Gram matrix", d <= 1e-9, format!("max |diff| {d:e}")));
        let pinv = pseudo_inverse(&delay)?;
        let mut worst = 0.0f64;
        for i in 0..5 {
            let rhs = random_vector(m * n, seed.wrapping_add(i))?;
            let fast = apply_fast_pinv(&f, &rhs)?;
            worst = worst.max(max_diff(&fast, &pinv.mul_vec(&rhs)?));
        }
        out.push(check("fast pseudo-inverse", worst <= 1e-8, format!("max |diff| {worst:e}")));
    }

    let report = bounds_for_spec(spec)?;
    if report.kappa_regime != KappaRegime::NotApplicable {
        let ok = summary.kappa <= report.kappa_bound * (1.0 + 1e-9);
        out.push(check(
            "condition number bound",
            ok,
            format!("kappa {} vs bound {} ({})", summary.kappa, report.kappa_bound, report.kappa_regime),
        ));
    }
    if report.det_regime != DetRegime::NotApplicable {
        let ok = summary.gen_det_log <= report.det_bound_log + 1e-9 * report.det_bound_log.abs().max(1.0);
        out.push(check(
            "determinant bound",
            ok,
            format!("log S {} vs bound {} ({})", summary.gen_det_log, report.det_bound_log, report.det_regime),
        ));
    }
    let smax_bound = sw[0] + 1.0;
    out.push(check(
        "sigma_max bound",
        summary.sigma_max <= smax_bound + 1e-10,
        format!("sigma_max {} vs bound {smax_bound}", summary.sigma_max),
    ));
    if report.embedding.guaranteed {
        out.push(check(
            "embedding guarantee",
            summary.sigma_min >= 1e-8,
            format!("sigma_min {} (margin {})", summary.sigma_min, report.embedding.margin),
        ));
    }
    let (first, _) = dominance_terms(spec.w())?;
    out.push(check("dominance term at most 1/2", first <= 0.5 + 1e-12, format!("{first}")));

    let lag = lag_monotonicity_check(spec.w(), n, 2 * n)?;
    out.push(check("lag monotonicity", lag.all(), format!("n = {n} -> {}: {lag:?}", 2 * n)));

    let b = random_vector(m, seed ^ 0xB1A5)?;
    let h0 = random_vector(m, seed ^ 0x40)?;
    let cfg = RecurrenceConfig::new(spec.w().clone(), b, h0)?;
    let inputs = generate_signal(SignalKind::WhiteNoise, m, 2 * n + 4, seed, &SignalParams::default())?;
    let trace = run_recurrence(&cfg, &inputs)?;
    let dv = assemble_delay_vectors(&trace, n + 2, n)?;
    let scale = dv.psi.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let signed = build_signed_delay_matrix(spec);
    let rhs = shifted_rhs(&dv.phi, &cfg.b)?;
    let rel = max_diff(&signed.mul_vec(&dv.psi)?, &rhs);
    out.push(check("delay relation", rel <= 1e-10 * scale, format!("residual {rel:e}")));
    let psi_hat = reconstruct_min_norm(spec, &dv.phi, &cfg.b)?;
    let solve = max_diff(&signed.mul_vec(&psi_hat)?, &rhs);
    out.push(check("min-norm reconstruction solves", solve <= 1e-10 * scale, format!("residual {solve:e}")));
    let proj = pseudo_inverse(&signed)?.mul_vec(&signed.mul_vec(&dv.psi)?)?;
    let gap = max_diff(&psi_hat, &proj);
    out.push(check("reconstruction equals row-space projection", gap <= 1e-9 * scale, format!("gap {gap:e}")));
    Ok(out)
}

pub fn run(spec: &DelaySpec, seed: u64) -> CliResult {
    let checks = collect(spec, seed)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{failed} check(s) failed")))
    }
}
