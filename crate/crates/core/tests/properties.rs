use proptest::prelude::*;

use qdbound::bounds::{fidelity, fuchs_sandwich_check, theorem1_bound, trace_distance};
use qdbound::cdd::cdd_sequence;
use qdbound::dynamics::{effective_hamiltonian, propagator, HamiltonianSchedule};
use qdbound::linalg::random::{ginibre, gue, random_density};
use qdbound::linalg::{expm_skew_hermitian, partial_trace_b, trial_rng, ComplexMatrix, SubsystemDims};
use qdbound::norms::{check_partial_trace_bound, summarize, NormKind};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn norm_summary_is_ordered(seed in any::<u64>(), n in 1usize..7) {
        let a = ginibre(&mut trial_rng(seed, 0), n);
        let s = summarize(&a);
        prop_assert!(s.ordering_ok);
        prop_assert_eq!(s.kyfan.len(), n);
        prop_assert!((s.kyfan[n - 1] - s.trace).abs() <= 1e-10 * s.trace.max(1.0));
        prop_assert!((s.kyfan[0] - s.operator).abs() <= 1e-12 * s.operator.max(1.0));
    }

    #[test]
    fn trace_distance_is_a_bounded_metric(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = trial_rng(seed, 1);
        let (a, b, c) = (random_density(&mut rng, n), random_density(&mut rng, n), random_density(&mut rng, n));
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= trace_distance(&a, &c).unwrap() + trace_distance(&c, &b).unwrap() + 1e-12);
        prop_assert!(trace_distance(&a, &a).unwrap() < 1e-12);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fuchs_sandwich_holds(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = trial_rng(seed, 2);
        let r = fuchs_sandwich_check(&random_density(&mut rng, n), &random_density(&mut rng, n)).unwrap();
        prop_assert!(r.holds(), "{:?}", r);
    }

    #[test]
    fn partial_trace_preserves_trace_and_contracts(seed in any::<u64>(), ds in 1usize..4, db in 1usize..4) {
        let dims = SubsystemDims::new(ds, db).unwrap();
        let x = ginibre(&mut trial_rng(seed, 3), ds * db);
        let red = partial_trace_b(&x, dims).unwrap();
        prop_assert!((red.trace() - x.trace()).norm() < 1e-10);
        for kind in [NormKind::Trace, NormKind::Frobenius, NormKind::Operator] {
            prop_assert!(check_partial_trace_bound(&x, dims, kind).unwrap().holds());
        }
    }

    #[test]
    fn propagators_are_unitary_and_logs_regenerate(seed in any::<u64>(), n in 2usize..5, t in 0.05f64..2.0) {
        let mut rng = trial_rng(seed, 4);
        let pieces = vec![(0.4 * t, gue(&mut rng, n)), (0.6 * t, gue(&mut rng, n))];
        let u = propagator(&HamiltonianSchedule::from_pieces(pieces).unwrap()).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-12);
        if let Ok(eff) = effective_hamiltonian(&u, t) {
            prop_assert!(eff.omega.hermitian_defect() < 1e-12);
            prop_assert!(expm_skew_hermitian(&eff.omega, t).unwrap().max_abs_diff(&u) < 1e-9);
        }
    }

    #[test]
    fn distance_bound_is_monotone_and_capped(t in 0.0f64..5.0, a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (theorem1_bound(t, lo).unwrap(), theorem1_bound(t, hi).unwrap());
        prop_assert!(x <= y && y <= 1.0 && x >= 0.0);
    }

    #[test]
    fn cdd_sequences_have_4n_free_intervals(level in 0u32..5, tau in 0.001f64..1.0) {
        let seq = cdd_sequence(level, tau).unwrap();
        let n = 4usize.pow(level);
        prop_assert_eq!(seq.free_count(), n);
        prop_assert!((seq.total_duration() - n as f64 * tau).abs() < 1e-9 * n as f64);
        prop_assert!(seq.net_pulse().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }
}
