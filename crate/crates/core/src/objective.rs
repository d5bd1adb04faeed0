//! The worst-case distance objective `v(pi) = max_i rho(P(pi, i), S)`.
//!
//! The inner maximum runs over pure opponents only. The distance is convex
//! and the score affine in the opponent's distribution, so the maximum over
//! the simplex is attained at a vertex.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::{NormSpec, TargetSet};
use crate::solvers;
use crate::tensor::{Distribution, PreferenceTensor};

/// Default tie tolerance for best-response sets.
pub const BEST_RESPONSE_TOL: f64 = 1e-9;
/// Default threshold for declaring an instance achievable.
pub const ACHIEVABLE_TOL: f64 = 1e-7;
/// Negative suboptimality below this magnitude is rounding noise.
pub const SUBOPTIMALITY_SLACK: f64 = 1e-8;

/// An instance `(P, S, ||.||_q)`.
#[derive(Debug, Clone)]
pub struct ValueContext {
    pub tensor: PreferenceTensor,
    pub set: TargetSet,
    pub norm: NormSpec,
}

impl ValueContext {
    pub fn new(tensor: PreferenceTensor, set: TargetSet, norm: NormSpec) -> Result<Self> {
        if tensor.k() != set.k() {
            return Err(Error::DimensionMismatch {
                what: "criteria (tensor vs target set)",
                expected: tensor.k(),
                found: set.k(),
            });
        }
        Ok(Self { tensor, set, norm })
    }

    pub fn d(&self) -> usize {
        self.tensor.d()
    }

    pub fn k(&self) -> usize {
        self.tensor.k()
    }

    /// Same set and norm, different tensor.
    pub fn with_tensor(&self, tensor: PreferenceTensor) -> Result<Self> {
        Self::new(tensor, self.set.clone(), self.norm)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.d() {
            return Err(Error::DimensionMismatch {
                what: "distribution",
                expected: self.d(),
                found: len,
            });
        }
        Ok(())
    }

    /// Distance of `P(x, i)` to the set, for every opponent `i`. `x` may be
    /// any real vector; the score map is extended linearly.
    pub fn column_distances(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        (0..self.d())
            .map(|i| {
                let z = self.tensor.score_linear(x, i);
                self.set.distance_slice(z.as_slice(), self.norm)
            })
            .collect()
    }

    /// `v(x)` for any real vector `x` of length `d`.
    pub fn value_linear(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .column_distances(x)?
            .into_iter()
            .fold(0.0, f64::max))
    }

    pub fn value(&self, pi: &Distribution) -> Result<f64> {
        self.value_linear(pi.weights())
    }

    /// `value(candidate) - opt_value`, clamped at zero for rounding noise.
    pub fn suboptimality(&self, candidate: &Distribution, opt_value: f64) -> Result<f64> {
        let gap = self.value(candidate)? - opt_value;
        if gap < -SUBOPTIMALITY_SLACK {
            return Err(Error::Inconsistent(format!(
                "candidate beats the claimed optimum by {:e}",
                -gap
            )));
        }
        Ok(gap.max(0.0))
    }

    /// Pure opponents whose distance is within `tol` of the maximum.
    pub fn best_response_set(&self, pi: &Distribution, tol: f64) -> Result<BestResponseSet> {
        if tol.is_nan() || tol < 0.0 {
            return Err(Error::InvalidParameter(format!("tolerance {tol} < 0")));
        }
        let dist = self.column_distances(pi.weights())?;
        let top = dist.iter().copied().fold(0.0, f64::max);
        let indices = dist
            .iter()
            .enumerate()
            .filter(|(_, v)| **v >= top - tol)
            .map(|(i, _)| i)
            .collect();
        Ok(BestResponseSet { indices, tol })
    }

    /// Whether some `pi` keeps every opponent's score inside the set, i.e.
    /// the optimal value is at most `tol`.
    pub fn achievable(&self, tol: f64) -> Result<bool> {
        Ok(solvers::solve_exact(self)?.value <= tol)
    }
}

/// Maximizers of the per-opponent distance (pure opponents only).
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseSet {
    pub indices: BTreeSet<usize>,
    pub tol: f64,
}

impl BestResponseSet {
    /// Lowest-index member, used wherever one representative is needed.
    pub fn first(&self) -> usize {
        *self.indices.iter().next().expect("best-response set is never empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{all_half, conflict_example, lecam_pair};

    fn two_ex_ctx() -> ValueContext {
        ValueContext::new(
            conflict_example(2, 2).unwrap(),
            TargetSet::orthant_half(2),
            NormSpec::INF,
        )
        .unwrap()
    }

    #[test]
    fn conflict_value_matches_sweep() {
        let ctx = two_ex_ctx();
        let v = ctx.value(&Distribution::uniform(2)).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        // Oracle: v(p) = max((1-p)/2, p/2) on a 1e-4 grid has its minimum 1/4.
        let min = (0..=10_000)
            .map(|s| {
                let p = s as f64 / 10_000.0;
                ctx.value(&Distribution::new(vec![p, 1.0 - p]).unwrap()).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((min - 0.25).abs() < 1e-12);
    }

    #[test]
    fn all_half_value_is_zero() {
        let ctx = ValueContext::new(all_half(4, 3), TargetSet::orthant_half(3), NormSpec::L2).unwrap();
        let pi = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(ctx.value(&pi).unwrap(), 0.0);
        assert_eq!(ctx.suboptimality(&pi, 0.0).unwrap(), 0.0);
        let br = ctx.best_response_set(&pi, BEST_RESPONSE_TOL).unwrap();
        assert_eq!(br.indices, (0..4).collect());
    }

    #[test]
    fn lecam_value_at_optimizer() {
        let (_, p1) = lecam_pair(4, 2, 0.25).unwrap();
        let ctx = ValueContext::new(p1, TargetSet::orthant_half(2), NormSpec::INF).unwrap();
        let p = 8.0 / 10.0;
        let pi = Distribution::new(vec![p / 2.0, p / 2.0, (1.0 - p) / 2.0, (1.0 - p) / 2.0]).unwrap();
        assert!((ctx.value(&pi).unwrap() - 0.025).abs() < 1e-15);
    }

    #[test]
    fn suboptimality_examples() {
        let ctx = two_ex_ctx();
        assert_eq!(ctx.suboptimality(&Distribution::uniform(2), 0.25).unwrap(), 0.0);
        let gap = ctx.suboptimality(&Distribution::point(2, 0), 0.25).unwrap();
        assert!((gap - 0.25).abs() < 1e-15);
        assert!(matches!(
            ctx.suboptimality(&Distribution::uniform(2), 0.3),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn best_response_examples() {
        let ctx = two_ex_ctx();
        let tie = ctx.best_response_set(&Distribution::uniform(2), BEST_RESPONSE_TOL).unwrap();
        assert_eq!(tie.indices, [0, 1].into_iter().collect());
        // At [1, 0] the opponent object 2 (index 1) yields distance 1/2, object 1 yields 0.
        let br = ctx.best_response_set(&Distribution::point(2, 0), BEST_RESPONSE_TOL).unwrap();
        assert_eq!(br.indices, [1].into_iter().collect());
        assert!(ctx.best_response_set(&Distribution::uniform(2), -1.0).is_err());
    }

    #[test]
    fn achievability_examples() {
        assert!(!two_ex_ctx().achievable(ACHIEVABLE_TOL).unwrap());
        let ctx = ValueContext::new(all_half(3, 2), TargetSet::orthant_half(2), NormSpec::INF).unwrap();
        assert!(ctx.achievable(ACHIEVABLE_TOL).unwrap());
    }

    #[test]
    fn context_rejects_mismatched_k() {
        assert!(ValueContext::new(all_half(3, 2), TargetSet::orthant_half(3), NormSpec::INF).is_err());
    }
}
