use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpSolution, Relation};
use crate::objective::ValueContext;
use crate::tensor::SquareMatrix;

use super::{clean_distribution, subgradient::column_gradients, Method, SolveReport};

/// Stop once the cutting-plane upper and lower bounds are this close.
pub const CUTTING_PLANE_GAP: f64 = 1e-9;
pub const CUTTING_PLANE_MAX_ITERS: usize = 5_000;

fn lp_error(e: Error) -> Error {
    match e {
        Error::Infeasible | Error::Unbounded => {
            Error::Inconsistent(format!("winner LP reported {e} on a valid instance"))
        }
        e => e,
    }
}

/// Maximin strategy of the zero-sum game with payoff `m`:
/// `max t  s.t.  pi^T M e_i >= t for all i,  pi in the simplex`.
/// The reported value is `t`.
pub fn solve_von_neumann(m: &SquareMatrix) -> Result<SolveReport> {
    let d = m.dim();
    if d == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let mut cost = vec![0.0; d + 1];
    cost[d] = 1.0;
    let mut lp = LinearProgram::maximize(cost);
    let mut simplex = vec![1.0; d + 1];
    simplex[d] = 0.0;
    lp.add_row(simplex, Relation::Eq, 1.0);
    for i in 0..d {
        let mut row: Vec<f64> = (0..d).map(|r| m.get(r, i)).collect();
        row.push(-1.0);
        lp.add_row(row, Relation::Ge, 0.0);
    }
    let sol = lp.solve().map_err(lp_error)?;
    Ok(SolveReport {
        winner: clean_distribution(&sol.x[..d])?,
        value: sol.objective,
        method: Method::LpExact,
        iterations: sol.pivots,
        seed: None,
        trace: None,
        last_iterate: None,
        alternative_optima: sol.alternative_optima,
    })
}

fn report_from_lp(ctx: &ValueContext, sol: &LpSolution) -> Result<SolveReport> {
    let winner = clean_distribution(&sol.x[..ctx.d()])?;
    let value = ctx.value(&winner)?;
    if (value - sol.objective).abs() > 1e-7 {
        return Err(Error::Inconsistent(format!(
            "LP objective {} disagrees with recomputed value {value}",
            sol.objective
        )));
    }
    Ok(SolveReport {
        winner,
        value,
        method: Method::LpExact,
        iterations: sol.pivots,
        seed: None,
        trace: None,
        last_iterate: None,
        alternative_optima: sol.alternative_optima,
    })
}

/// Exact winner for `l_inf`: the value is a maximum of affine functions of
/// `pi` (one per opponent and constraint row), so
/// `min t  s.t.  t + sum_j a_j/|a| pi^T P^j e_i >= b/|a|`.
pub fn solve_blackwell_lp(ctx: &ValueContext) -> Result<SolveReport> {
    if !ctx.norm.is_inf() {
        return Err(Error::Unsupported(format!(
            "the max-of-affine LP needs the l_inf norm, got l_{}",
            ctx.norm
        )));
    }
    let (d, k) = (ctx.d(), ctx.k());
    let mut cost = vec![0.0; d + 1];
    cost[d] = 1.0;
    let mut lp = LinearProgram::minimize(cost);
    let mut simplex = vec![1.0; d + 1];
    simplex[d] = 0.0;
    lp.add_row(simplex, Relation::Eq, 1.0);
    let rows: Vec<_> = ctx.set.constraints().map(|c| ctx.set.row(c)).collect();
    for i in 0..d {
        for (a, b) in &rows {
            let mass: f64 = a.iter().sum();
            let mut row: Vec<f64> = (0..d)
                .map(|r| (0..k).map(|j| a[j] * ctx.tensor.get(j, r, i)).sum::<f64>() / mass)
                .collect();
            row.push(1.0);
            lp.add_row(row, Relation::Ge, b / mass);
        }
    }
    let sol = lp.solve().map_err(lp_error)?;
    report_from_lp(ctx, &sol)
}

/// Exact winner for `l_1`. With slack `u_i >= 0` per opponent, the distance
/// of `P(pi, i)` is `min sum_j u_ij  s.t.  P(pi, i) + u_i in S`, so
/// `min t  s.t.  t >= sum_j u_ij,  A (P(pi, i) + u_i) >= b`.
pub fn solve_l1_lp(ctx: &ValueContext) -> Result<SolveReport> {
    if ctx.norm.q() != 1.0 {
        return Err(Error::Unsupported(format!(
            "the slack LP needs the l_1 norm, got l_{}",
            ctx.norm
        )));
    }
    let (d, k) = (ctx.d(), ctx.k());
    let n = d + 1 + d * k;
    let u = |i: usize, j: usize| d + 1 + i * k + j;
    let mut cost = vec![0.0; n];
    cost[d] = 1.0;
    let mut lp = LinearProgram::minimize(cost);
    let mut simplex = vec![0.0; n];
    simplex[..d].iter_mut().for_each(|x| *x = 1.0);
    lp.add_row(simplex, Relation::Eq, 1.0);
    let rows: Vec<_> = ctx.set.constraints().map(|c| ctx.set.row(c)).collect();
    for i in 0..d {
        let mut budget = vec![0.0; n];
        budget[d] = 1.0;
        (0..k).for_each(|j| budget[u(i, j)] = -1.0);
        lp.add_row(budget, Relation::Ge, 0.0);
        for (a, b) in &rows {
            let mut row = vec![0.0; n];
            for (r, x) in row[..d].iter_mut().enumerate() {
                *x = (0..k).map(|j| a[j] * ctx.tensor.get(j, r, i)).sum();
            }
            (0..k).for_each(|j| row[u(i, j)] = a[j]);
            lp.add_row(row, Relation::Ge, *b);
        }
    }
    let sol = lp.solve().map_err(lp_error)?;
    report_from_lp(ctx, &sol)
}

/// Kelley's cutting-plane method for any norm. Each round evaluates every
/// opponent's distance at the master solution and adds one linearization
/// per opponent with positive distance. The master problem
/// `min t  s.t.  t >= c_m + g_m . pi` is solved through its dual, which
/// has only `d + 1` rows:
/// `max sum_m c_m mu_m + nu  s.t.  sum mu <= 1,  nu <= sum_m g_mr mu_m`.
pub fn solve_cutting_plane(ctx: &ValueContext) -> Result<SolveReport> {
    let d = ctx.d();
    let mut offsets: Vec<f64> = Vec::new();
    let mut slopes: Vec<Vec<f64>> = Vec::new();
    let mut pi = vec![1.0 / d as f64; d];
    let mut best = (f64::INFINITY, pi.clone());
    let mut lower = 0.0_f64;
    for iter in 1..=CUTTING_PLANE_MAX_ITERS {
        let cuts = column_gradients(ctx, &pi)?;
        let value = cuts.iter().map(|(v, _)| *v).fold(0.0, f64::max);
        if value < best.0 {
            best = (value, pi.clone());
        }
        if best.0 - lower <= CUTTING_PLANE_GAP {
            return finish(ctx, &best.1, iter);
        }
        for (v, g) in cuts {
            if v > 0.0 {
                let c = v - g.iter().zip(&pi).map(|(g, p)| g * p).sum::<f64>();
                offsets.push(c);
                slopes.push(g);
            }
        }
        let (t, next) = master(d, &offsets, &slopes)?;
        lower = lower.max(t);
        pi = next;
    }
    Err(Error::NonConvergence {
        sweeps: CUTTING_PLANE_MAX_ITERS,
        residual: best.0 - lower,
    })
}

fn master(d: usize, offsets: &[f64], slopes: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let m = offsets.len();
    // Columns: mu_1..mu_m, nu+, nu-.
    let mut cost = offsets.to_vec();
    cost.extend([1.0, -1.0]);
    let mut lp = LinearProgram::maximize(cost);
    let mut mass = vec![1.0; m + 2];
    mass[m] = 0.0;
    mass[m + 1] = 0.0;
    lp.add_row(mass, Relation::Le, 1.0);
    for r in 0..d {
        let mut row: Vec<f64> = slopes.iter().map(|g| -g[r]).collect();
        row.extend([1.0, -1.0]);
        lp.add_row(row, Relation::Le, 0.0);
    }
    let sol = lp.solve().map_err(lp_error)?;
    let pi = clean_distribution(&sol.duals[1..])?;
    Ok((sol.objective, pi.weights().to_vec()))
}

fn finish(ctx: &ValueContext, pi: &[f64], iterations: usize) -> Result<SolveReport> {
    let winner = clean_distribution(pi)?;
    let value = ctx.value(&winner)?;
    Ok(SolveReport {
        winner,
        value,
        method: Method::CuttingPlane,
        iterations,
        seed: None,
        trace: None,
        last_iterate: None,
        alternative_optima: false,
    })
}
