//! Randomized invariant suite behind `blackwell verify`.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::experiments::binomial_test;
use crate::geometry::{HalfSpace, NormSpec, TargetSet};
use crate::instances;
use crate::objective::ValueContext;
use crate::rng::{derive_seed, rng_from_seed, TrialRng};
use crate::solvers::{solve_exact, solve_first_order, solve_von_neumann, subgradient, SolverParams};
use crate::tensor::{Distribution, PreferenceTensor, SquareMatrix};

/// Outcome of one property family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteCheck {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// First failing case, if any.
    pub detail: Option<String>,
}

impl SuiteCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn random_preference_matrix(rng: &mut TrialRng, d: usize) -> SquareMatrix {
    let mut m = SquareMatrix::constant(d, 0.5);
    for a in 0..d {
        for b in a + 1..d {
            let v: f64 = rng.gen();
            m.set(a, b, v);
            m.set(b, a, 1.0 - v);
        }
    }
    m
}

pub fn random_tensor(rng: &mut TrialRng, d: usize, k: usize) -> PreferenceTensor {
    let slices: Vec<SquareMatrix> = (0..k).map(|_| random_preference_matrix(rng, d)).collect();
    PreferenceTensor::from_slices(&slices).expect("random slices are valid")
}

/// Box with lower bounds in `[0.2, 0.7)` and, half the time, one
/// half-space that the all-ones vector satisfies.
pub fn random_target_set(rng: &mut TrialRng, k: usize) -> TargetSet {
    let lower: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..0.7)).collect();
    let mut halves = Vec::new();
    if rng.gen_bool(0.5) {
        let a: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let b = a.iter().sum::<f64>() * rng.gen_range(0.4..0.75);
        halves.push(HalfSpace::new(a, b).expect("positive normal"));
    }
    TargetSet::new(lower, halves).expect("bounds in range")
}

pub fn random_distribution(rng: &mut TrialRng, d: usize) -> Distribution {
    let w: Vec<f64> = (0..d).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    Distribution::normalized(w).expect("positive weights")
}

fn perturbed(rng: &mut TrialRng, p: &PreferenceTensor, scale: f64) -> PreferenceTensor {
    let mut out = p.clone();
    for j in 0..p.k() {
        for a in 0..p.d() {
            for b in a + 1..p.d() {
                let v = (p.get(j, a, b) + scale * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0);
                out.set(j, a, b, v);
                out.set(j, b, a, 1.0 - v);
            }
        }
    }
    out
}

const NORMS: [NormSpec; 3] = [NormSpec::L1, NormSpec::L2, NormSpec::INF];

fn run<F>(name: &'static str, cases: usize, seed: u64, mut case: F) -> SuiteCheck
where
    F: FnMut(&mut TrialRng, usize) -> Result<Option<String>>,
{
    let mut failures = 0;
    let mut detail = None;
    for c in 0..cases {
        let mut rng = rng_from_seed(derive_seed(seed, c as u64));
        let outcome = match case(&mut rng, c) {
            Ok(v) => v,
            Err(e) => Some(format!("error: {e}")),
        };
        if let Some(msg) = outcome {
            failures += 1;
            detail.get_or_insert(format!("case {c}: {msg}"));
        }
    }
    SuiteCheck {
        name,
        cases,
        failures,
        detail,
    }
}

/// Runs every property family with `cases` random cases each.
pub fn invariant_suite(seed: u64, cases: usize) -> Vec<SuiteCheck> {
    let mut out = Vec::new();

    out.push(run("constructors validate", 1, seed, |_, _| {
        let mut bad = Vec::new();
        for d in [2, 4, 6] {
            if instances::conflict_example(d, 3)?.validate().is_ok() {
                continue;
            }
            bad.push(format!("conflict d={d}"));
        }
        for d in [4, 5, 8] {
            let (p0, p1) = instances::lecam_pair(d, 2, 0.25)?;
            if !(p0.validate().is_ok() && p1.validate().is_ok()) {
                bad.push(format!("lecam d={d}"));
            }
        }
        for d in [3, 7, 15] {
            if !instances::rps_tensor(d)?.validate_preference().is_ok() {
                bad.push(format!("rps d={d}"));
            }
        }
        if !instances::driving_dataset()?.tensor.validate().is_ok() {
            bad.push("driving".into());
        }
        Ok((!bad.is_empty()).then(|| bad.join(", ")))
    }));

    out.push(run("von Neumann value is 1/2", cases, seed ^ 1, |rng, _| {
        let d = rng.gen_range(2..=12);
        let t = solve_von_neumann(&random_preference_matrix(rng, d))?.value;
        Ok(((t - 0.5).abs() > 1e-8).then(|| format!("d={d}: t*={t}")))
    }));

    out.push(run("perturbation bound", cases, seed ^ 2, |rng, c| {
        let (d, k) = (rng.gen_range(2..=5), rng.gen_range(1..=3));
        let norm = NORMS[c % 3];
        let p = random_tensor(rng, d, k);
        let pt = perturbed(rng, &p, 0.2);
        let truth = ValueContext::new(p.clone(), random_target_set(rng, k), norm)?;
        let opt = solve_exact(&truth)?.value;
        let est = solve_exact(&truth.with_tensor(pt.clone())?)?;
        let gap = truth.value(&est.winner)? - opt;
        let bound = 2.0 * pt.column_deviation(&p, norm)?;
        Ok((gap > bound + 1e-8).then(|| format!("q={norm}: gap {gap} > {bound}")))
    }));

    out.push(run("convexity and Lipschitz", cases, seed ^ 3, |rng, c| {
        let (d, k) = (rng.gen_range(2..=6), rng.gen_range(1..=3));
        let norm = NORMS[c % 3];
        let ctx = ValueContext::new(random_tensor(rng, d, k), random_target_set(rng, k), norm)?;
        let a = random_distribution(rng, d);
        let b = random_distribution(rng, d);
        let (va, vb) = (ctx.value(&a)?, ctx.value(&b)?);
        let vm = ctx.value(&Distribution::mix(&a, &b, 0.5)?)?;
        if vm > 0.5 * (va + vb) + 1e-9 {
            return Ok(Some(format!("q={norm}: midpoint {vm} above chord {}", 0.5 * (va + vb))));
        }
        let lip = norm.lipschitz(k) * a.l1_distance(&b);
        Ok(((va - vb).abs() > lip + 1e-9).then(|| format!("q={norm}: slope above {}", norm.lipschitz(k))))
    }));

    out.push(run("subgradient inequality", cases, seed ^ 4, |rng, c| {
        let (d, k) = (rng.gen_range(2..=5), rng.gen_range(1..=3));
        let norm = NORMS[c % 3];
        let ctx = ValueContext::new(random_tensor(rng, d, k), random_target_set(rng, k), norm)?;
        let a = random_distribution(rng, d);
        let b = random_distribution(rng, d);
        let g = subgradient(&ctx, &a)?;
        let lin: f64 = ctx.value(&a)?
            + g.iter().zip(b.weights().iter().zip(a.weights())).map(|(g, (x, y))| g * (x - y)).sum::<f64>();
        let vb = ctx.value(&b)?;
        Ok((vb < lin - 1e-8).then(|| format!("q={norm}: v(b)={vb} below {lin}")))
    }));

    out.push(run("first-order rate", cases.min(20), seed ^ 5, |rng, _| {
        let (d, k) = (rng.gen_range(2..=5), rng.gen_range(1..=3));
        let ctx = ValueContext::new(random_tensor(rng, d, k), random_target_set(rng, k), NormSpec::INF)?;
        let t = 2_000;
        let opt = solve_exact(&ctx)?.value;
        let r = solve_first_order(&ctx, &SolverParams::with_t(t))?;
        let bound = NormSpec::INF.lipschitz(k) * (2.0 * (d as f64).ln() / t as f64).sqrt();
        let gap = r.value - opt;
        Ok((gap > bound + 1e-9).then(|| format!("gap {gap} > {bound}")))
    }));

    out.push(run("known values", 1, seed, |_, _| {
        let b = instances::conflict_bundle(3)?;
        let v = solve_exact(&ValueContext::new(b.tensor, b.set, b.norm)?)?.value;
        if (v - 0.25).abs() > 1e-6 {
            return Ok(Some(format!("conflict value {v}")));
        }
        let p = binomial_test(41, 14, 0.5)?;
        Ok(((p - 0.0298).abs() > 5e-4).then(|| format!("binomial p-value {p}")))
    }));

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_is_deterministic() {
        let a = invariant_suite(7, 25);
        for c in &a {
            assert!(c.passed(), "{c:?}");
        }
        assert_eq!(a, invariant_suite(7, 25));
    }

    #[test]
    fn generators_produce_valid_objects() {
        let mut rng = rng_from_seed(1);
        for _ in 0..20 {
            assert!(random_tensor(&mut rng, 4, 2).validate().is_ok());
            let s = random_target_set(&mut rng, 3);
            assert!(s.shift_to_set(&[1.0; 3]) <= 0.0);
            let p = random_distribution(&mut rng, 5);
            assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
