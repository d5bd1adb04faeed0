//! Experiment harness: sample-complexity sweeps, adaptivity sweeps,
//! convergence traces, value curves and the exact binomial test.
//!
//! Every trial cell gets its own RNG stream derived from the sweep seed and
//! the cell index, so results do not depend on thread scheduling.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NormSpec, TargetSet};
use crate::instances;
use crate::objective::ValueContext;
use crate::rng::derive_seed;
use crate::sampling::{plug_in_against, plug_in_nash_against, GaussianModel};
use crate::solvers::{solve_exact, solve_first_order, solve_von_neumann, solve_zeroth_order, SolverParams};
use crate::tensor::{Distribution, PreferenceTensor};

/// Named instance constructors, as they appear in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum InstanceSpec {
    AllHalf { d: usize, k: usize },
    Conflict { d: usize, k: usize },
    LecamP0 { d: usize, k: usize, gamma: f64 },
    LecamP1 { d: usize, k: usize, gamma: f64 },
    DeltaMixture { delta: f64, alpha0: f64, beta0: f64, j1: usize, j2: usize, k: usize },
    /// Baseline policies of the driving study with `S2`.
    Driving,
    /// A tensor file, optionally with a set file.
    Files { tensor: PathBuf, set: Option<PathBuf> },
}

impl InstanceSpec {
    /// The tensor and the set the instance comes with (`[1/2, 1]^k` unless
    /// the family defines its own).
    pub fn build(&self) -> Result<(PreferenceTensor, TargetSet)> {
        let half = |t: PreferenceTensor| {
            let k = t.k();
            (t, TargetSet::orthant_half(k))
        };
        Ok(match self {
            Self::AllHalf { d, k } => half(instances::all_half(*d, *k)),
            Self::Conflict { d, k } => half(instances::conflict_example(*d, *k)?),
            Self::LecamP0 { d, k, gamma } => half(instances::lecam_pair(*d, *k, *gamma)?.0),
            Self::LecamP1 { d, k, gamma } => half(instances::lecam_pair(*d, *k, *gamma)?.1),
            Self::DeltaMixture { delta, alpha0, beta0, j1, j2, k } => {
                half(instances::delta_mixture(*delta, *alpha0, *beta0, *j1, *j2, *k)?)
            }
            Self::Driving => {
                let data = instances::driving_dataset()?;
                (data.base_tensor(), data.s2)
            }
            Self::Files { tensor, set } => {
                let t = PreferenceTensor::load(tensor, false)?;
                let s = match set {
                    Some(p) => TargetSet::load(p)?,
                    None => TargetSet::orthant_half(t.k()),
                };
                (t, s)
            }
        })
    }
}

/// Which solver produces the plug-in winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SweepSolver {
    #[default]
    Exact,
    FirstOrder(SolverParams),
    ZerothOrder(SolverParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub instance: InstanceSpec,
    /// Overrides the instance's own target set.
    #[serde(default)]
    pub set: Option<TargetSet>,
    #[serde(default = "default_norm")]
    pub norm: NormSpec,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SweepSolver,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_norm() -> NormSpec {
    NormSpec::INF
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n grid must be nonempty and strictly increasing".into()));
        }
        Ok(())
    }

    pub fn context(&self) -> Result<ValueContext> {
        let (tensor, set) = self.instance.build()?;
        ValueContext::new(tensor, self.set.clone().unwrap_or(set), self.norm)
    }
}

/// One `(n, trial)` cell. Failed trials keep their error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub delta_p: Option<f64>,
    pub solve_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub failures: usize,
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    /// `r2` is below [`R2_WARNING`].
    pub low_r2: bool,
}

/// Fits with a lower coefficient of determination are flagged.
pub const R2_WARNING: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<Summary>,
    pub fit: Option<SlopeFit>,
}

impl SweepResult {
    /// CSV with columns `n,trial,seed,delta_p,solve_ms`; failed trials have
    /// an empty `delta_p`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "trial", "seed", "delta_p", "solve_ms"])?;
        for r in &self.records {
            out.write_record([
                r.n.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.delta_p.map(|v| v.to_string()).unwrap_or_default(),
                format!("{:.3}", r.solve_ms),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Ordinary least squares of `log y` on `log x`; points with nonpositive
/// coordinates are dropped.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(SlopeFit {
        slope,
        intercept,
        r2,
        points: pts.len(),
        low_r2: r2 < R2_WARNING,
    })
}

fn summarize(n: usize, values: &[f64], failures: usize) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Summary {
        n,
        mean: v.iter().sum::<f64>() / v.len().max(1) as f64,
        median: quantile(&v, 0.5),
        q1: quantile(&v, 0.25),
        q3: quantile(&v, 0.75),
        failures,
    }
}

/// Plug-in suboptimality over an `(n, trial)` grid, in parallel. The slope
/// of log median error against log n is fitted without the two smallest
/// sample sizes (when at least four remain), where the asymptotic regime
/// has not set in.
pub fn sweep_sample_complexity(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let ctx = cfg.context()?;
    let opt = solve_exact(&ctx)?.value;
    let cells: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let records: Vec<TrialRecord> = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(n, trial))| {
            let seed = derive_seed(cfg.seed, idx as u64);
            let start = Instant::now();
            let outcome = run_trial(&ctx, opt, &cfg.solver, n, seed);
            let solve_ms = start.elapsed().as_secs_f64() * 1e3;
            let (delta_p, error) = match outcome {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            TrialRecord {
                n,
                trial,
                seed,
                delta_p,
                solve_ms,
                error,
            }
        })
        .collect();
    let summaries: Vec<Summary> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let cell: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
            let ok: Vec<f64> = cell.iter().filter_map(|r| r.delta_p).collect();
            summarize(n, &ok, cell.len() - ok.len())
        })
        .collect();
    let skip = if summaries.len() >= 6 { 2 } else { 0 };
    let xs: Vec<f64> = summaries[skip..].iter().map(|s| s.n as f64).collect();
    let ys: Vec<f64> = summaries[skip..].iter().map(|s| s.median).collect();
    Ok(SweepResult {
        records,
        summaries,
        fit: fit_loglog(&xs, &ys),
    })
}

fn run_trial(ctx: &ValueContext, opt: f64, solver: &SweepSolver, n: usize, seed: u64) -> Result<f64> {
    match solver {
        SweepSolver::Exact => Ok(plug_in_against(ctx, opt, n, seed)?.delta_p),
        SweepSolver::FirstOrder(p) | SweepSolver::ZerothOrder(p) => {
            let empirical = crate::sampling::sample_bernoulli(&ctx.tensor, n, seed)?;
            let t = crate::sampling::build_empirical(ctx.d(), ctx.k(), &empirical)?;
            let ectx = ctx.with_tensor(t)?;
            let params = SolverParams { seed, ..p.clone() };
            let r = if matches!(solver, SweepSolver::FirstOrder(_)) {
                solve_first_order(&ectx, &params)?
            } else {
                solve_zeroth_order(&ectx, &params)?
            };
            ctx.suboptimality(&r.winner, opt)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashRecord {
    pub d: usize,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub delta_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivityResult {
    pub records: Vec<NashRecord>,
    /// `(d, n, median delta_a, effective variance)`.
    pub medians: Vec<(usize, usize, f64, f64)>,
    /// Growth exponent of the median error in `d`, per `n`.
    pub exponents: Vec<(usize, Option<SlopeFit>)>,
}

impl AdaptivityResult {
    /// CSV with columns `d,n,trial,seed,delta_a`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Plug-in von Neumann error on the cyclic RPS family under the Gaussian
/// model, for every `(d, n, trial)`.
pub fn sweep_nash_adaptivity(d_grid: &[usize], n_grid: &[usize], trials: usize, seed: u64) -> Result<AdaptivityResult> {
    if trials == 0 || d_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::InvalidParameter("empty adaptivity grid".into()));
    }
    let models = d_grid
        .iter()
        .map(|&d| Ok((d, GaussianModel::new(instances::rps_tensor(d)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize, usize)> = (0..models.len())
        .flat_map(|m| n_grid.iter().flat_map(move |&n| (0..trials).map(move |t| (m, n, t))))
        .collect();
    let records = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(m, n, trial))| {
            let (d, model) = &models[m];
            let seed = derive_seed(seed, idx as u64);
            let (_, delta_a) = plug_in_nash_against(model, &Distribution::uniform(*d), n, seed)?;
            Ok(NashRecord {
                d: *d,
                n,
                trial,
                seed,
                delta_a,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut medians = Vec::new();
    let mut exponents = Vec::new();
    for &n in n_grid {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (d, model) in &models {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.d == *d && r.n == n)
                .map(|r| r.delta_a)
                .collect();
            let med = median(&vals);
            let var = crate::sampling::effective_variance(model, &Distribution::uniform(*d))?;
            medians.push((*d, n, med, var));
            xs.push(*d as f64);
            ys.push(med);
        }
        exponents.push((n, fit_loglog(&xs, &ys)));
    }
    Ok(AdaptivityResult {
        records,
        medians,
        exponents,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IterativeMethod {
    FirstOrder,
    ZerothOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    #[serde(rename = "T")]
    pub t: usize,
    pub seed: u64,
    pub value: f64,
    pub gap: f64,
    /// Rate bound at this `T`: `k^(1/q) sqrt(2 ln d / T)` for first order,
    /// `3 k^(1/q) sqrt(d ln^2 d / T)` for zeroth order.
    pub bound: f64,
}

pub fn rate_bound(ctx: &ValueContext, method: IterativeMethod, t: usize) -> f64 {
    let d = ctx.d().max(2) as f64;
    let l = ctx.norm.lipschitz(ctx.k());
    match method {
        IterativeMethod::FirstOrder => l * (2.0 * d.ln() / t as f64).sqrt(),
        IterativeMethod::ZerothOrder => 3.0 * l * (d * d.ln().powi(2) / t as f64).sqrt(),
    }
}

/// Gap of the averaged iterate against the exact optimum for every `T` in
/// the grid and every seed (seeds only matter for the zeroth-order method).
pub fn convergence_trace(
    ctx: &ValueContext,
    method: IterativeMethod,
    t_grid: &[usize],
    seeds: &[u64],
) -> Result<Vec<TracePoint>> {
    let opt = solve_exact(ctx)?.value;
    let cells: Vec<(usize, u64)> = t_grid
        .iter()
        .flat_map(|&t| seeds.iter().map(move |&s| (t, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(t, seed)| {
            let p = SolverParams {
                seed,
                ..SolverParams::with_t(t)
            };
            let r = match method {
                IterativeMethod::FirstOrder => solve_first_order(ctx, &p)?,
                IterativeMethod::ZerothOrder => solve_zeroth_order(ctx, &p)?,
            };
            Ok(TracePoint {
                t,
                seed,
                value: r.value,
                gap: ctx.suboptimality(&r.winner, opt)?,
                bound: rate_bound(ctx, method, t),
            })
        })
        .collect()
}

pub fn write_trace_csv<W: Write>(points: &[TracePoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

/// Parameters of the mixture family `(1 - delta) P_{0,0} + delta P_{alpha0, beta0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureFamily {
    pub alpha0: f64,
    pub beta0: f64,
    pub j1: usize,
    pub j2: usize,
    pub k: usize,
}

/// Exact `l_inf` value of the mixture at `points` evenly spaced `delta`s in
/// `[0, 1]`.
pub fn value_curve(family: &MixtureFamily, set: &TargetSet, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::InvalidParameter("a curve needs at least two points".into()));
    }
    (0..points)
        .into_par_iter()
        .map(|s| {
            let delta = s as f64 / (points - 1) as f64;
            let t = instances::delta_mixture(delta, family.alpha0, family.beta0, family.j1, family.j2, family.k)?;
            let ctx = ValueContext::new(t, set.clone(), NormSpec::INF)?;
            Ok((delta, solve_exact(&ctx)?.value))
        })
        .collect()
}

/// Shape diagnostics of a sampled value curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveCheck {
    /// `V(0) <= V(delta)` everywhere.
    pub minimum_at_zero: bool,
    pub max_jump: f64,
    /// Largest jump allowed by the Lipschitz bound.
    pub jump_bound: f64,
    /// Grid cells whose second difference is not zero.
    pub kinks: usize,
}

impl CurveCheck {
    pub fn passes(&self, max_kinks: usize) -> bool {
        self.minimum_at_zero && self.max_jump <= self.jump_bound && self.kinks <= max_kinks
    }
}

/// Rate at which mixture entries move with `delta`, which bounds the slope
/// of the `l_inf` value curve.
pub fn mixture_lipschitz(family: &MixtureFamily) -> f64 {
    family.alpha0.abs().max(family.beta0.abs())
}

/// Most grid cells with a nonzero second difference a piecewise linear
/// value curve can have: two per breakpoint, and the curve is a maximum of
/// two functions each with at most `2h` pieces, `h` counting the box faces
/// and the half-spaces.
pub fn kink_budget(set: &TargetSet) -> usize {
    4 * (set.k() + set.halfspaces().len())
}

/// Tolerance for calling a second difference zero.
pub const KINK_TOL: f64 = 1e-9;

/// `lipschitz` bounds `|V(delta) - V(delta')| / |delta - delta'|`.
pub fn check_curve(curve: &[(f64, f64)], lipschitz: f64) -> CurveCheck {
    let v0 = curve.first().map_or(0.0, |p| p.1);
    let minimum_at_zero = curve.iter().all(|p| v0 <= p.1 + 1e-12);
    let step = curve.windows(2).map(|w| w[1].0 - w[0].0).fold(0.0, f64::max);
    let max_jump = curve.windows(2).map(|w| (w[1].1 - w[0].1).abs()).fold(0.0, f64::max);
    let kinks = curve
        .windows(3)
        .filter(|w| (w[2].1 - 2.0 * w[1].1 + w[0].1).abs() > KINK_TOL)
        .count();
    CurveCheck {
        minimum_at_zero,
        max_jump,
        jump_bound: lipschitz * step + 1e-12,
        kinks,
    }
}

fn ln_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// One-sided exact binomial test: `P(X <= x)` for `X ~ Bin(n, p0)`, summed
/// in the log domain.
pub fn binomial_test(n: u64, x: u64, p0: f64) -> Result<f64> {
    if x > n {
        return Err(Error::InvalidParameter(format!("successes {x} exceed trials {n}")));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::InvalidParameter(format!("null probability {p0} outside [0, 1]")));
    }
    if p0 == 0.0 {
        return Ok(1.0);
    }
    if p0 == 1.0 {
        return Ok(if x == n { 1.0 } else { 0.0 });
    }
    let lf = ln_factorials(n);
    let (lp, lq) = (p0.ln(), (1.0 - p0).ln());
    let terms: Vec<f64> = (0..=x)
        .map(|i| {
            let i = i as usize;
            let n = n as usize;
            lf[n] - lf[i] - lf[n - i] + i as f64 * lp + (n - i) as f64 * lq
        })
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total = top.exp() * terms.iter().map(|t| (t - top).exp()).sum::<f64>();
    Ok(total.min(1.0))
}

/// The von Neumann value of a matrix, for quick checks.
pub fn von_neumann_value(m: &crate::tensor::SquareMatrix) -> Result<f64> {
    Ok(solve_von_neumann(m)?.value)
}
