use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::objective::ValueContext;
use crate::rng::{rng_from_seed, TrialRng};

use super::{clean_distribution, softmax, Method, SolveReport, SolverParams};

/// Default step `c / (k^(1/q) sqrt(d T))` and radius `c ln d / sqrt(T)`.
pub(crate) fn default_eta_delta(ctx: &ValueContext, p: &SolverParams) -> (f64, f64) {
    let d = ctx.d() as f64;
    let t = p.t as f64;
    let eta = p.c / (ctx.norm.lipschitz(ctx.k()) * (d * t).sqrt());
    let delta = p.c * d.max(2.0).ln() / t.sqrt();
    (p.eta.unwrap_or(eta), p.delta.unwrap_or(delta))
}

fn unit_sphere(rng: &mut TrialRng, d: usize) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return u.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Two-point gradient-free mirror descent. Each step queries the value at
/// `pi_t +- delta u_t` (the score map extended linearly off the simplex),
/// forms `g = d / (2 delta) (v+ - v-) u_t` and sets
/// `theta <- theta - eta g`, `pi = softmax(theta)`. Returns the average
/// iterate.
pub fn solve_zeroth_order(ctx: &ValueContext, p: &SolverParams) -> Result<SolveReport> {
    p.validate()?;
    let d = ctx.d();
    let (eta, delta) = default_eta_delta(ctx, p);
    let mut rng = rng_from_seed(p.seed);
    let mut theta = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut trace = p.record_trace.then(|| Vec::with_capacity(p.t));
    let mut pi = softmax(&theta);
    for _ in 0..p.t {
        pi = softmax(&theta);
        sum.iter_mut().zip(&pi).for_each(|(s, x)| *s += x);
        if let Some(tr) = trace.as_mut() {
            tr.push(ctx.value_linear(&pi)?);
        }
        let u = unit_sphere(&mut rng, d);
        let plus: Vec<f64> = pi.iter().zip(&u).map(|(x, u)| x + delta * u).collect();
        let minus: Vec<f64> = pi.iter().zip(&u).map(|(x, u)| x - delta * u).collect();
        let diff = ctx.value_linear(&plus)? - ctx.value_linear(&minus)?;
        let scale = d as f64 / (2.0 * delta) * diff;
        theta.iter_mut().zip(&u).for_each(|(th, u)| *th -= eta * scale * u);
    }
    let winner = clean_distribution(&sum)?;
    let value = ctx.value(&winner)?;
    Ok(SolveReport {
        winner,
        value,
        method: Method::ZerothOrder,
        iterations: p.t,
        seed: Some(p.seed),
        trace,
        last_iterate: Some(clean_distribution(&pi)?),
        alternative_optima: false,
    })
}
