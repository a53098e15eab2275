use delaylab::bounds::{bounds_for_spec, bounds_from_extremes, BoundReport};
use delaylab::delaymat::{build_delay_matrix, DelaySpec};
use delaylab::matcore::{hermitian_eigenvalues, singular_values, spectral_summary, DEFAULT_RANK_TOL};
use delaylab::spectra::{hermitian_gram_eigs, scalar_singular_values};

use crate::{CliResult, Failure};

/// Closed-form singular values of `M`, descending, when the class has one.
pub fn closed_form_singular_values(spec: &DelaySpec) -> delaylab::Result<Option<Vec<f64>>> {
    if let Some(omega) = spec.omega() {
        return Ok(Some(scalar_singular_values(omega, spec.n())));
    }
    if !spec.has_hermitian_weight() {
        return Ok(None);
    }
    let lambdas = hermitian_eigenvalues(spec.w())?;
    let mut s: Vec<f64> = hermitian_gram_eigs(&lambdas, spec.n()).into_iter().flatten().map(f64::sqrt).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(Some(s))
}

pub fn spectrum(spec: &DelaySpec) -> CliResult {
    let oracle = singular_values(&build_delay_matrix(spec))?;
    let closed = closed_form_singular_values(spec)?;
    println!("class: {}  n: {}  m: {}", spec.class(), spec.n(), spec.m());
    match &closed {
        Some(c) => {
            println!("j,closed_form,oracle,rel_diff");
            let mut worst = 0.0f64;
            for (j, (a, b)) in c.iter().zip(&oracle).enumerate() {
                let d = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
                worst = worst.max(d);
                println!("{},{a},{b},{d:e}", j + 1);
            }
            println!("max_rel_deviation: {worst:e}");
            if worst > 1e-8 {
                return Err(Failure::Validation(format!("closed form deviates from the oracle by {worst:e}")));
            }
        }
        None => {
            println!("j,oracle");
            for (j, s) in oracle.iter().enumerate() {
                println!("{},{s}", j + 1);
            }
            println!("no closed form for a general weight");
        }
    }
    Ok(())
}

fn print_report(r: &BoundReport) {
    println!("kappa_bound: {} ({})", r.kappa_bound, r.kappa_regime);
    println!("det_bound_log: {} ({})", r.det_bound_log, r.det_regime);
    let e = &r.embedding;
    println!("embedding_guaranteed: {}", e.guaranteed);
    println!("  weak: {}  case1: {}  case2: {}  margin: {}", e.weak_ok, e.case1_ok, e.case2_ok, e.margin);
}

pub fn bounds_spec(spec: &DelaySpec) -> CliResult {
    let report = bounds_for_spec(spec)?;
    let measured = spectral_summary(&build_delay_matrix(spec), DEFAULT_RANK_TOL)?;
    println!("class: {}  n: {}  m: {}", spec.class(), spec.n(), spec.m());
    print_report(&report);
    println!("sigma_max_bound: {}", singular_values(spec.w())?[0] + 1.0);
    println!("measured_sigma_max: {}", measured.sigma_max);
    println!("measured_sigma_min: {}", measured.sigma_min);
    println!("measured_kappa: {}", measured.kappa);
    println!("measured_gen_det_log: {}", measured.gen_det_log);
    Ok(())
}

pub fn bounds_extremes(sigma_min: f64, sigma_max: f64) -> CliResult {
    let report = bounds_from_extremes(sigma_min, sigma_max)?;
    println!("sigma_min(W): {sigma_min}  sigma_max(W): {sigma_max}");
    print_report(&report);
    println!("sigma_max_bound: {}", sigma_max + 1.0);
    Ok(())
}
