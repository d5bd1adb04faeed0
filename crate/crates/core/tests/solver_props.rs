mod common;

use blackwell_core::experiments::median;
use blackwell_core::instances::lecam_pair;
use blackwell_core::solvers::{solve_blackwell_lp, solve_exact, solve_first_order, solve_von_neumann, solve_zeroth_order};
use blackwell_core::{NormSpec, SolverParams, TargetSet, ValueContext};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// The LP value is below every grid point and within one grid-Lipschitz
    /// unit of the best one.
    #[test]
    fn blackwell_lp_matches_simplex_grid(
        ctx in (2usize..=6, 1usize..=3).prop_flat_map(|(d, k)| (common::tensor(d, k), common::target_set(k)))
            .prop_map(|(t, s)| ValueContext::new(t, s, NormSpec::INF).unwrap()),
    ) {
        let r = solve_blackwell_lp(&ctx).unwrap();
        let steps = 50;
        let grid = common::grid_min(&ctx, steps);
        let unit = ctx.norm.lipschitz(ctx.k()) * ctx.d() as f64 / steps as f64;
        prop_assert!(r.value <= grid + 1e-9, "{} above grid {}", r.value, grid);
        prop_assert!(grid - r.value <= unit, "{} vs grid {}", r.value, grid);
        let w = r.winner.weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12 && w.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn exact_solvers_land_on_the_simplex(
        ctx in (2usize..=5, 1usize..=3, prop_oneof![Just(NormSpec::L1), Just(NormSpec::L2), Just(NormSpec::new(1.5).unwrap())])
            .prop_flat_map(|(d, k, q)| (common::tensor(d, k), common::target_set(k), Just(q)))
            .prop_map(|(t, s, q)| ValueContext::new(t, s, q).unwrap()),
    ) {
        let r = solve_exact(&ctx).unwrap();
        let w = r.winner.weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12 && w.iter().all(|x| *x >= 0.0));
        prop_assert!((ctx.value(&r.winner).unwrap() - r.value).abs() <= 1e-9);
    }

    #[test]
    fn von_neumann_value_is_one_half(t in (2usize..=20).prop_flat_map(|d| common::tensor(d, 1))) {
        let r = solve_von_neumann(&t.slice(0)).unwrap();
        prop_assert!((r.value - 0.5).abs() <= 1e-8);
    }
}

fn lecam_ctx() -> ValueContext {
    let (_, p1) = lecam_pair(4, 2, 0.25).unwrap();
    ValueContext::new(p1, TargetSet::orthant_half(2), NormSpec::INF).unwrap()
}

#[test]
fn first_order_running_minimum_never_increases() {
    let ctx = lecam_ctx();
    let r = solve_first_order(&ctx, &SolverParams { record_trace: true, ..SolverParams::with_t(5_000) }).unwrap();
    let trace = r.trace.unwrap();
    let mut best = f64::INFINITY;
    let mut prev = f64::INFINITY;
    for v in trace {
        best = best.min(v);
        assert!(best <= prev);
        prev = best;
    }
}

#[test]
fn gaps_shrink_when_t_quadruples() {
    let ctx = lecam_ctx();
    let opt = solve_exact(&ctx).unwrap().value;
    let gap = |t: usize, seed: u64, zeroth: bool| {
        let p = SolverParams { seed, ..SolverParams::with_t(t) };
        let r = if zeroth { solve_zeroth_order(&ctx, &p) } else { solve_first_order(&ctx, &p) }.unwrap();
        ctx.suboptimality(&r.winner, opt).unwrap()
    };
    for t in [500, 2_000] {
        let ratio = gap(4 * t, 0, false) / gap(t, 0, false);
        assert!(ratio <= 0.7, "first order T={t}: ratio {ratio}");
        let ratios: Vec<f64> = (0..9).map(|s| gap(4 * t, s, true) / gap(t, s, true)).collect();
        let med = median(&ratios);
        assert!(med <= 0.7, "zeroth order T={t}: median ratio {med} ({ratios:?})");
    }
}
