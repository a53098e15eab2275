mod common;

use common::*;
use delaylab::delaymat::{build_signed_delay_matrix, DelaySpec};
use delaylab::experiments::random_weight_with_norm;
use delaylab::lrnn::{
    assemble_delay_vectors, generate_signal, reconstruct, reconstruction_report, run_recurrence, shifted_rhs,
    verify_delay_relation, Reconstruction, RecurrenceConfig, SignalKind, SignalParams, Trace,
};
use delaylab::matcore::pseudo_inverse;
use delaylab::Complex64;
use proptest::prelude::*;

struct Case {
    spec: DelaySpec,
    cfg: RecurrenceConfig,
    trace: Trace,
}

fn case(m: usize, n: usize, norm: f64, t: usize, seed: u64) -> Case {
    let w = random_weight_with_norm(m, norm, seed).unwrap();
    let cfg = RecurrenceConfig::new(w.clone(), complex_vector(m, seed ^ 1), complex_vector(m, seed ^ 2)).unwrap();
    let trace = run_recurrence(&cfg, &noise(m, t, seed ^ 3)).unwrap();
    Case { spec: DelaySpec::infer(n, w).unwrap(), cfg, trace }
}

#[test]
fn index_range() {
    let c = case(2, 3, 0.5, 6, 1);
    assert!(assemble_delay_vectors(&c.trace, 2, 3).is_err());
    assert!(assemble_delay_vectors(&c.trace, 3, 3).is_ok());
    assert!(assemble_delay_vectors(&c.trace, 6, 3).is_ok());
    assert!(assemble_delay_vectors(&c.trace, 7, 3).is_err());
}

#[test]
fn signals_are_seeded() {
    for kind in [SignalKind::Sine, SignalKind::LinearSystem, SignalKind::WhiteNoise] {
        let p = SignalParams::default();
        let a = generate_signal(kind, 3, 20, 4, &p).unwrap();
        assert_eq!(a, generate_signal(kind, 3, 20, 4, &p).unwrap());
        assert_eq!(a.len(), 20);
        assert!(a.iter().all(|y| y.len() == 3 && y.iter().all(|z| z.re.is_finite() && z.im == 0.0)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delay_relation_holds(m in 1usize..5, n in 1usize..6, norm in 0.0..1.5f64, extra in 0usize..5, seed in any::<u64>()) {
        let c = case(m, n, norm, n + extra, seed);
        prop_assert!(c.trace.max_step_residual(&c.cfg) < 1e-12);
        for k in n..=c.trace.len() {
            let dv = assemble_delay_vectors(&c.trace, k, n).unwrap();
            let scale = dv.psi.iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(verify_delay_relation(&c.spec, &c.cfg, &dv).unwrap() <= 1e-12 * scale);
        }
    }

    #[test]
    fn min_norm_is_row_space_projection(m in 1usize..4, n in 1usize..5, norm in 0.0..1.5f64, seed in any::<u64>()) {
        let c = case(m, n, norm, n + 2, seed);
        let dv = assemble_delay_vectors(&c.trace, n + 1, n).unwrap();
        let report = reconstruction_report(&c.spec, &c.cfg, &dv).unwrap();
        let scale = dv.psi.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(report.solve_residual <= 1e-10 * scale);
        let signed = build_signed_delay_matrix(&c.spec);
        let proj = pseudo_inverse(&signed).unwrap().mul_vec(&signed.mul_vec(&dv.psi).unwrap()).unwrap();
        let hat = reconstruct(&c.spec, &dv.phi, &c.cfg.b, &Reconstruction::MinNorm).unwrap();
        prop_assert!(max_abs_diff(&hat, &proj) <= 1e-9 * scale);
        // Minimum norm: no other solution is shorter, in particular the true state.
        let nrm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        prop_assert!(nrm(&hat) <= nrm(&dv.psi) * (1.0 + 1e-10));
    }

    #[test]
    fn bias_only_shifts_the_right_hand_side(m in 1usize..4, n in 1usize..5, seed in any::<u64>()) {
        let c = case(m, n, 0.7, n + 1, seed);
        let dv = assemble_delay_vectors(&c.trace, n, n).unwrap();
        let moved: Vec<Complex64> = shifted_rhs(&dv.phi, &c.cfg.b).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); m];
        for mode in [Reconstruction::MinNorm, Reconstruction::PinnedTail(dv.psi[m * n..].to_vec())] {
            let a = reconstruct(&c.spec, &dv.phi, &c.cfg.b, &mode).unwrap();
            let b = reconstruct(&c.spec, &moved, &zero, &mode).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn pinned_tail_recovers_every_window(m in 1usize..4, n in 1usize..5, norm in 0.0..1.2f64, seed in any::<u64>()) {
        let c = case(m, n, norm, n + 4, seed);
        let mut previous: Option<Vec<Complex64>> = None;
        for k in n..=c.trace.len() {
            let dv = assemble_delay_vectors(&c.trace, k, n).unwrap();
            let tail = c.trace.states[k - n].clone();
            let psi = reconstruct(&c.spec, &dv.phi, &c.cfg.b, &Reconstruction::PinnedTail(tail)).unwrap();
            let scale = dv.psi.iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(max_abs_diff(&psi, &dv.psi) <= 1e-12 * scale);
            // Consecutive windows overlap in n states.
            if let Some(prev) = previous {
                prop_assert!(max_abs_diff(&psi[m..], &prev[..m * n]) <= 1e-12 * scale);
            }
            previous = Some(psi);
        }
    }

    #[test]
    fn trace_csv_round_trip(m in 1usize..4, t in 1usize..8, seed in any::<u64>()) {
        let c = case(m, 1, 0.5, t, seed);
        let mut buf = Vec::new();
        c.trace.write_csv(&mut buf).unwrap();
        let back = Trace::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, c.trace);
    }
}
