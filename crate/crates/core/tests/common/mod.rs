//! Strategies and oracles shared by the integration suites.
#![allow(dead_code)]

use blackwell_core::{Distribution, HalfSpace, PreferenceTensor, SquareMatrix, TargetSet, ValueContext};
use proptest::prelude::*;

/// Upper-triangle entries of `k` slices, mirrored into a valid tensor.
pub fn tensor(d: usize, k: usize) -> impl Strategy<Value = PreferenceTensor> {
    proptest::collection::vec(0.0..=1.0f64, k * d * (d - 1) / 2).prop_map(move |upper| {
        let mut it = upper.into_iter();
        let slices: Vec<SquareMatrix> = (0..k)
            .map(|_| {
                let mut m = SquareMatrix::constant(d, 0.5);
                for a in 0..d {
                    for b in a + 1..d {
                        let v = it.next().unwrap();
                        m.set(a, b, v);
                        m.set(b, a, 1.0 - v);
                    }
                }
                m
            })
            .collect();
        PreferenceTensor::from_slices(&slices).unwrap()
    })
}

pub fn sized_tensor(max_d: usize, max_k: usize) -> impl Strategy<Value = PreferenceTensor> {
    (2..=max_d, 1..=max_k).prop_flat_map(|(d, k)| tensor(d, k))
}

pub fn distribution(d: usize) -> impl Strategy<Value = Distribution> {
    proptest::collection::vec(0.001..1.0f64, d).prop_map(|w| Distribution::normalized(w).unwrap())
}

/// Box in `[0.1, 0.8]^k` plus up to two half-spaces containing the
/// all-ones vector.
pub fn target_set(k: usize) -> impl Strategy<Value = TargetSet> {
    let half = (proptest::collection::vec(0.05..1.0f64, k), 0.3..0.8f64)
        .prop_map(|(a, f)| {
            let b = f * a.iter().sum::<f64>();
            HalfSpace::new(a, b).unwrap()
        });
    (proptest::collection::vec(0.1..0.8f64, k), proptest::collection::vec(half, 0..=2))
        .prop_map(|(lower, hs)| TargetSet::new(lower, hs).unwrap())
}

/// Smallest value over the simplex grid with spacing `1/steps`.
pub fn grid_min(ctx: &ValueContext, steps: usize) -> f64 {
    let d = ctx.d();
    let mut best = f64::INFINITY;
    let mut counts = vec![0usize; d];
    let mut x = vec![0.0; d];
    fn rec(ctx: &ValueContext, steps: usize, i: usize, left: usize, counts: &mut [usize], x: &mut [f64], best: &mut f64) {
        let d = counts.len();
        if i == d - 1 {
            counts[i] = left;
            for (xj, c) in x.iter_mut().zip(counts.iter()) {
                *xj = *c as f64 / steps as f64;
            }
            let v = ctx.value_linear(x).unwrap();
            if v < *best {
                *best = v;
            }
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(ctx, steps, i + 1, left - c, counts, x, best);
        }
    }
    rec(ctx, steps, 0, steps, &mut counts, &mut x, &mut best);
    best
}

/// Distance to the set by brute force over a grid of the box
/// `[0, 1.5]^k` (k <= 3), for the `l_inf` norm.
pub fn grid_distance_inf(set: &TargetSet, z: &[f64], step: f64) -> f64 {
    let k = z.len();
    let n = (1.5 / step).round() as usize;
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; k];
    loop {
        let v: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
        if set.shift_to_set(&v) <= 1e-12 {
            let dist = v.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            best = best.min(dist);
        }
        let mut p = 0;
        loop {
            if p == k {
                return best;
            }
            idx[p] += 1;
            if idx[p] <= n {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}
