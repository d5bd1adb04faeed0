use crate::error::Result;
use crate::objective::ValueContext;
use crate::tensor::Distribution;

use super::{clean_distribution, guarded_exp, subgradient, Method, SolveReport, SolverParams};

/// Default step `k^(-1/q) sqrt(2 ln d / T)`.
pub(crate) fn default_eta(ctx: &ValueContext, t: usize) -> f64 {
    let d = ctx.d().max(2) as f64;
    (2.0 * d.ln() / t as f64).sqrt() / ctx.norm.lipschitz(ctx.k())
}

/// Exponentiated subgradient descent from the uniform distribution:
/// `theta_{t+1,i} = pi_{t,i} exp(-eta g_{t,i})`, `pi_{t+1} = theta / |theta|_1`.
/// Returns the average iterate; the last iterate is reported alongside.
pub fn solve_first_order(ctx: &ValueContext, p: &SolverParams) -> Result<SolveReport> {
    p.validate()?;
    let d = ctx.d();
    let eta = p.eta.unwrap_or_else(|| default_eta(ctx, p.t));
    let mut pi = vec![1.0 / d as f64; d];
    let mut sum = vec![0.0; d];
    let mut trace = p.record_trace.then(|| Vec::with_capacity(p.t));
    for _ in 0..p.t {
        sum.iter_mut().zip(&pi).for_each(|(s, x)| *s += x);
        let current = Distribution::normalized(pi.clone())?;
        if let Some(tr) = trace.as_mut() {
            tr.push(ctx.value(&current)?);
        }
        let g = subgradient(ctx, &current)?;
        let mut theta: Vec<f64> = pi
            .iter()
            .zip(&g)
            .map(|(x, g)| x * guarded_exp(-eta * g))
            .collect();
        let norm: f64 = theta.iter().sum();
        if norm > 0.0 && norm.is_finite() {
            theta.iter_mut().for_each(|x| *x /= norm);
            pi = theta;
        }
    }
    let winner = clean_distribution(&sum)?;
    let value = ctx.value(&winner)?;
    Ok(SolveReport {
        winner,
        value,
        method: Method::FirstOrder,
        iterations: p.t,
        seed: None,
        trace,
        last_iterate: Some(clean_distribution(&pi)?),
        alternative_optima: false,
    })
}
