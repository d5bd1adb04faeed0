mod common;

use blackwell_core::experiments::median;
use blackwell_core::instances::lecam_pair;
use blackwell_core::sampling::{build_empirical, build_empirical_with, plug_in_against, sample_bernoulli, EmpiricalOptions};
use blackwell_core::solvers::solve_exact;
use blackwell_core::{NormSpec, TargetSet, ValueContext};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn empirical_tensor_is_valid(t in common::sized_tensor(6, 3), n in 0usize..400, seed in any::<u64>()) {
        let batch = sample_bernoulli(&t, n, seed).unwrap();
        prop_assert_eq!(batch.len(), n);
        prop_assert!(build_empirical(t.d(), t.k(), &batch).unwrap().validate().is_ok());
        let strict = build_empirical_with(t.d(), t.k(), &batch, EmpiricalOptions { strict_empirical: true }).unwrap();
        prop_assert!(strict.validate().is_ok());
    }

    #[test]
    fn same_seed_same_batch(t in common::sized_tensor(4, 2), seed in any::<u64>()) {
        let a = sample_bernoulli(&t, 50, seed).unwrap();
        let b = sample_bernoulli(&t, 50, seed).unwrap();
        prop_assert_eq!(a.samples, b.samples);
    }
}

#[test]
fn empirical_entries_are_unbiased() {
    let (_, t) = lecam_pair(4, 2, 0.25).unwrap();
    let (d, k, n, batches) = (4, 2, 600, 200);
    let mut sums = vec![0.0; k * d * d];
    let mut sq = vec![0.0; k * d * d];
    for s in 0..batches {
        let e = build_empirical(d, k, &sample_bernoulli(&t, n, 1_000 + s).unwrap()).unwrap();
        for j in 0..k {
            for a in 0..d {
                for b in a + 1..d {
                    let v = e.get(j, a, b);
                    sums[(j * d + a) * d + b] += v;
                    sq[(j * d + a) * d + b] += v * v;
                }
            }
        }
    }
    for j in 0..k {
        for a in 0..d {
            for b in a + 1..d {
                let idx = (j * d + a) * d + b;
                let mean = sums[idx] / batches as f64;
                let var = sq[idx] / batches as f64 - mean * mean;
                let se = (var / batches as f64).sqrt().max(1e-12);
                let truth = t.get(j, a, b);
                assert!((mean - truth).abs() <= 3.0 * se, "cell ({j},{a},{b}): {mean} vs {truth} (se {se})");
            }
        }
    }
}

#[test]
fn median_error_decays_with_n() {
    let (_, t) = lecam_pair(4, 2, 0.25).unwrap();
    let ctx = ValueContext::new(t, TargetSet::orthant_half(2), NormSpec::INF).unwrap();
    let opt = solve_exact(&ctx).unwrap().value;
    let med = |n: usize| {
        let v: Vec<f64> = (0..50).map(|s| plug_in_against(&ctx, opt, n, 7_000 + s).unwrap().delta_p).collect();
        median(&v)
    };
    for n in [4_096, 16_384] {
        let ratio = med(4 * n) / med(n);
        assert!(ratio <= 0.75, "n={n}: ratio {ratio}");
    }
}
