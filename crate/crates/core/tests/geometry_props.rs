mod common;

use blackwell_core::{NormSpec, TargetSet};
use proptest::prelude::*;

fn norms() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::L1),
        Just(NormSpec::L2),
        Just(NormSpec::new(3.0).unwrap()),
        Just(NormSpec::INF),
    ]
}

fn point(k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-0.2..1.2f64, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distance_is_monotone(
        (set, z, up) in (1usize..4).prop_flat_map(|k| (common::target_set(k), point(k), proptest::collection::vec(0.0..0.5f64, k))),
        q in norms(),
    ) {
        let higher: Vec<f64> = z.iter().zip(&up).map(|(a, b)| a + b).collect();
        let d_low = set.distance_slice(&z, q).unwrap();
        let d_high = set.distance_slice(&higher, q).unwrap();
        prop_assert!(d_high <= d_low + 1e-9, "{} > {}", d_high, d_low);
    }

    #[test]
    fn zero_distance_iff_contained(
        (set, z) in (1usize..4).prop_flat_map(|k| (common::target_set(k), point(k))),
        q in norms(),
    ) {
        let dist = set.distance_slice(&z, q).unwrap();
        let inside = set.shift_to_set(&z) <= 1e-12;
        prop_assert_eq!(dist <= 1e-12, inside, "distance {}", dist);
    }

    #[test]
    fn distance_is_one_lipschitz(
        (set, a, b) in (1usize..4).prop_flat_map(|k| (common::target_set(k), point(k), point(k))),
        q in norms(),
    ) {
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let gap = (set.distance_slice(&a, q).unwrap() - set.distance_slice(&b, q).unwrap()).abs();
        prop_assert!(gap <= q.norm(&diff) + 1e-9);
    }

    #[test]
    fn euclidean_projection_is_feasible_and_attains_distance(
        (set, z) in (1usize..5).prop_flat_map(|k| (common::target_set(k), point(k))),
    ) {
        let x = set.project_slice(&z, NormSpec::L2).unwrap();
        prop_assert!(set.shift_to_set(&x) <= 1e-12);
        let r: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dist = set.distance_slice(&z, NormSpec::L2).unwrap();
        prop_assert!((NormSpec::L2.norm(&r) - dist).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inf_distance_matches_grid_oracle(
        (set, z) in (1usize..=3).prop_flat_map(|k| (common::target_set(k), proptest::collection::vec(0.0..1.0f64, k))),
    ) {
        let step = if set.k() == 3 { 0.02 } else { 0.005 };
        let exact = set.distance_slice(&z, NormSpec::INF).unwrap();
        let grid = common::grid_distance_inf(&set, &z, step);
        prop_assert!(exact <= grid + 1e-12 && grid - exact <= 2.0 * step, "{} vs {}", exact, grid);
    }
}

#[test]
fn set_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = blackwell_core::instances::driving_s2();
    let path = dir.path().join("s2.json");
    s.save(&path).unwrap();
    assert_eq!(TargetSet::load(&path).unwrap(), s);
}
