use blackwell_core::experiments::{check_curve, kink_budget, mixture_lipschitz, value_curve, MixtureFamily};
use blackwell_core::instances::{
    alpha_beta_tensor, all_half, conflict_example, delta_mixture, driving_dataset, lecam_pair, conflict_bundle,
    rps_tensor,
};
use blackwell_core::solvers::{solve_blackwell_lp, solve_exact};
use blackwell_core::{NormSpec, TargetSet, ValueContext};
use proptest::prelude::*;

#[test]
fn every_constructor_validates() {
    for (d, k) in [(2, 1), (3, 4), (6, 2)] {
        assert!(all_half(d, k).validate().is_ok());
    }
    for d in [2, 4, 8] {
        assert!(conflict_example(d, 3).unwrap().validate().is_ok());
    }
    for d in 4..=9 {
        let (p0, p1) = lecam_pair(d, 3, 0.5).unwrap();
        assert!(p0.validate().is_ok() && p1.validate().is_ok(), "d={d}");
    }
    for d in (3..=15).step_by(2) {
        assert!(rps_tensor(d).unwrap().validate_preference().is_ok());
    }
    assert!(alpha_beta_tensor(0.5, -0.5, 0, 2, 3).unwrap().validate().is_ok());
    assert!(driving_dataset().unwrap().tensor.validate().is_ok());
}

#[test]
fn bundled_known_values_match_solvers() {
    for k in 2..=4 {
        let b = conflict_bundle(k).unwrap();
        let r = solve_exact(&ValueContext::new(b.tensor, b.set, b.norm).unwrap()).unwrap();
        assert!((r.value - b.known_value.unwrap()).abs() <= 1e-6);
        assert!(r.winner.l1_distance(b.known_winner.as_ref().unwrap()) <= 2e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// The all-half tensor is never worse than any `P_{alpha, beta}`.
    #[test]
    fn all_half_is_best(alpha in -0.5..=0.5f64, beta in -0.5..=0.5f64, delta in 0.0..=1.0f64) {
        let s0 = TargetSet::orthant_half(2);
        let base = solve_blackwell_lp(&ValueContext::new(all_half(2, 2), s0.clone(), NormSpec::INF).unwrap()).unwrap();
        let t = delta_mixture(delta, alpha, beta, 0, 1, 2).unwrap();
        let v = solve_blackwell_lp(&ValueContext::new(t, s0, NormSpec::INF).unwrap()).unwrap();
        prop_assert!(base.value <= v.value + 1e-12);
    }
}

#[test]
fn value_curves_are_piecewise_linear_and_continuous() {
    let sets = [
        TargetSet::orthant_half(2),
        TargetSet::new(
            vec![0.3, 0.2],
            vec![blackwell_core::HalfSpace::new(vec![1.0, 0.5], 0.6).unwrap()],
        )
        .unwrap(),
    ];
    for (alpha0, beta0) in [(0.5, -0.5), (0.2, 0.4), (-0.3, -0.1), (0.45, -0.05)] {
        for set in &sets {
            let fam = MixtureFamily { alpha0, beta0, j1: 0, j2: 1, k: 2 };
            let curve = value_curve(&fam, set, 1001).unwrap();
            let check = check_curve(&curve, mixture_lipschitz(&fam));
            assert!(check.passes(kink_budget(set)), "({alpha0},{beta0}): {check:?}");
        }
    }
}
