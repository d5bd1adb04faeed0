mod common;

use blackwell_core::solvers::solve_exact;
use blackwell_core::{Distribution, NormSpec, PreferenceTensor, ValueContext};
use proptest::prelude::*;

fn norms() -> impl Strategy<Value = NormSpec> {
    prop_oneof![Just(NormSpec::L1), Just(NormSpec::L2), Just(NormSpec::INF)]
}

fn instance() -> impl Strategy<Value = (ValueContext, Distribution, Distribution)> {
    (2usize..6, 1usize..4, norms()).prop_flat_map(|(d, k, q)| {
        (common::tensor(d, k), common::target_set(k), common::distribution(d), common::distribution(d))
            .prop_map(move |(t, s, a, b)| (ValueContext::new(t, s, q).unwrap(), a, b))
    })
}

/// Symmetric perturbation of every upper entry by up to `scale / 2`.
fn perturbation(t: &PreferenceTensor, noise: &[f64], scale: f64) -> PreferenceTensor {
    let mut out = t.clone();
    let mut it = noise.iter().cycle();
    for j in 0..t.k() {
        for a in 0..t.d() {
            for b in a + 1..t.d() {
                let v = (t.get(j, a, b) + scale * (it.next().unwrap() - 0.5)).clamp(0.0, 1.0);
                out.set(j, a, b, v);
                out.set(j, b, a, 1.0 - v);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn value_is_convex((ctx, a, b) in instance(), alpha in 0.0..=1.0f64) {
        let mix = Distribution::mix(&a, &b, alpha).unwrap();
        let lhs = ctx.value(&mix).unwrap();
        let rhs = alpha * ctx.value(&a).unwrap() + (1.0 - alpha) * ctx.value(&b).unwrap();
        prop_assert!(lhs <= rhs + 1e-9, "{} > {}", lhs, rhs);
    }

    #[test]
    fn value_is_lipschitz_in_l1((ctx, a, b) in instance()) {
        let gap = (ctx.value(&a).unwrap() - ctx.value(&b).unwrap()).abs();
        prop_assert!(gap <= ctx.norm.lipschitz(ctx.k()) * a.l1_distance(&b) + 1e-9);
    }

    #[test]
    fn value_lies_in_range((ctx, a, _b) in instance()) {
        let v = ctx.value(&a).unwrap();
        prop_assert!(v >= 0.0 && v <= ctx.norm.lipschitz(ctx.k()) + 1e-12);
    }

    #[test]
    fn best_responses_attain_the_value((ctx, a, _b) in instance()) {
        let v = ctx.value(&a).unwrap();
        let br = ctx.best_response_set(&a, 1e-9).unwrap();
        let cols = ctx.column_distances(a.weights()).unwrap();
        for i in &br.indices {
            prop_assert!((cols[*i] - v).abs() <= 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn perturbation_bound(
        (ctx, _a, _b) in instance(),
        noise in proptest::collection::vec(0.0..1.0f64, 1..40),
        scale in prop_oneof![Just(0.02), Just(0.1), Just(0.5)],
    ) {
        let opt = solve_exact(&ctx).unwrap().value;
        let pt = perturbation(&ctx.tensor, &noise, scale);
        let est = solve_exact(&ctx.with_tensor(pt.clone()).unwrap()).unwrap();
        let gap = ctx.suboptimality(&est.winner, opt).unwrap();
        let bound = 2.0 * pt.column_deviation(&ctx.tensor, ctx.norm).unwrap();
        prop_assert!(gap <= bound + 1e-8, "gap {} > {}", gap, bound);
    }
}
