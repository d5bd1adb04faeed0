//! Passive observation models and plug-in estimation.
//!
//! The Bernoulli model draws an unordered pair uniformly and a criterion
//! uniformly, then a coin with the tensor's probability. The Gaussian model
//! draws an ordered pair (both indices uniform) and a normal response.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NormSpec, TargetSet};
use crate::objective::ValueContext;
use crate::rng::{rng_from_seed, TrialRng};
use crate::solvers::{solve_exact, solve_von_neumann, SolveReport};
use crate::tensor::{Distribution, PreferenceTensor, SquareMatrix, UpperEntries};

/// A comparison request `(i1, i2, j)` with `i1 < i2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub i1: usize,
    pub i2: usize,
    pub j: usize,
}

impl Query {
    pub fn new(i1: usize, i2: usize, j: usize, d: usize, k: usize) -> Result<Self> {
        if i1 >= i2 || i2 >= d {
            return Err(Error::InvalidParameter(format!(
                "query pair ({i1}, {i2}) needs i1 < i2 < {d}"
            )));
        }
        if j >= k {
            return Err(Error::IndexOutOfRange { index: j, len: k });
        }
        Ok(Self { i1, i2, j })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Bernoulli,
    Gaussian,
}

/// Observed comparisons together with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub d: usize,
    pub k: usize,
    pub model: Model,
    pub seed: Option<u64>,
    pub samples: Vec<(Query, f64)>,
}

/// JSON sidecar stored next to a batch CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchMeta {
    pub d: usize,
    pub k: usize,
    pub model: Model,
    pub seed: Option<u64>,
    pub n: usize,
}

#[derive(Serialize, Deserialize)]
struct Row {
    i1: usize,
    i2: usize,
    j: usize,
    y: f64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn meta(&self) -> BatchMeta {
        BatchMeta {
            d: self.d,
            k: self.k,
            model: self.model,
            seed: self.seed,
            n: self.samples.len(),
        }
    }

    /// CSV with header `i1,i2,j,y`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (q, y) in &self.samples {
            out.serialize(Row {
                i1: q.i1,
                i2: q.i2,
                j: q.j,
                y: *y,
            })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, meta: &BatchMeta) -> Result<Self> {
        let mut samples = Vec::with_capacity(meta.n);
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: Row = row?;
            let q = Query::new(row.i1, row.i2, row.j, meta.d, meta.k)?;
            if meta.model == Model::Bernoulli && row.y != 0.0 && row.y != 1.0 {
                return Err(Error::InvalidParameter(format!("Bernoulli response {}", row.y)));
            }
            samples.push((q, row.y));
        }
        if samples.len() != meta.n {
            return Err(Error::DimensionMismatch {
                what: "batch rows",
                expected: meta.n,
                found: samples.len(),
            });
        }
        Ok(Self {
            d: meta.d,
            k: meta.k,
            model: meta.model,
            seed: meta.seed,
            samples,
        })
    }

    fn sidecar(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Writes `path` (CSV) and the metadata sidecar next to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.write_csv(File::create(path)?)?;
        std::fs::write(Self::sidecar(path), serde_json::to_string_pretty(&self.meta())?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta: BatchMeta = serde_json::from_str(&std::fs::read_to_string(Self::sidecar(path))?)?;
        Self::read_csv(File::open(path)?, &meta)
    }
}

fn check_pairs(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("need at least two objects, got {d}")));
    }
    Ok(())
}

/// One uniform unordered pair and a uniform criterion.
pub fn draw_query(d: usize, k: usize, rng: &mut TrialRng) -> Query {
    let a = rng.gen_range(0..d);
    let mut b = rng.gen_range(0..d - 1);
    if b >= a {
        b += 1;
    }
    Query {
        i1: a.min(b),
        i2: a.max(b),
        j: rng.gen_range(0..k),
    }
}

/// `n` i.i.d. queries from a stream seeded with `seed`.
pub fn draw_queries(d: usize, k: usize, n: usize, seed: u64) -> Result<Vec<Query>> {
    check_pairs(d)?;
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one criterion".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..n).map(|_| draw_query(d, k, &mut rng)).collect())
}

/// A coin with probability `p(j; i1, i2)`.
pub fn observe_bernoulli(t: &PreferenceTensor, q: Query, rng: &mut TrialRng) -> f64 {
    let p = t.get(q.j, q.i1, q.i2);
    if rng.gen::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

/// `n` Bernoulli comparisons against `truth`.
pub fn sample_bernoulli(truth: &PreferenceTensor, n: usize, seed: u64) -> Result<SampleBatch> {
    let (d, k) = (truth.d(), truth.k());
    check_pairs(d)?;
    let mut rng = rng_from_seed(seed);
    let samples = (0..n)
        .map(|_| {
            let q = draw_query(d, k, &mut rng);
            (q, observe_bernoulli(truth, q, &mut rng))
        })
        .collect();
    Ok(SampleBatch {
        d,
        k,
        model: Model::Bernoulli,
        seed: Some(seed),
        samples,
    })
}

/// Per-cell sums and counts over the upper triangle, criterion-major.
#[derive(Debug, Clone)]
struct CellTally {
    d: usize,
    k: usize,
    sum: Vec<f64>,
    count: Vec<u64>,
}

impl CellTally {
    fn new(d: usize, k: usize) -> Self {
        Self {
            d,
            k,
            sum: vec![0.0; d * d * k],
            count: vec![0; d * d * k],
        }
    }

    fn add(&mut self, q: Query, y: f64) {
        let idx = (q.j * self.d + q.i1) * self.d + q.i2;
        self.sum[idx] += y;
        self.count[idx] += 1;
    }

    fn tensor(&self, strict: bool) -> Result<PreferenceTensor> {
        let mut upper = UpperEntries::new(self.d, self.k);
        for j in 0..self.k {
            for a in 0..self.d {
                for b in a + 1..self.d {
                    let idx = (j * self.d + a) * self.d + b;
                    let c = self.count[idx];
                    let v = if c > 0 {
                        self.sum[idx] / c as f64
                    } else if strict {
                        0.0
                    } else {
                        0.5
                    };
                    upper.set(j, a, b, v)?;
                }
            }
        }
        upper.complete()
    }
}

/// How never-sampled cells are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmpiricalOptions {
    /// Fill with the literal 0 of the `sum / max(1, count)` formula instead
    /// of the neutral 1/2.
    pub strict_empirical: bool,
}

/// Cell means of a Bernoulli batch, mirrored into a full tensor.
pub fn build_empirical(d: usize, k: usize, batch: &SampleBatch) -> Result<PreferenceTensor> {
    build_empirical_with(d, k, batch, EmpiricalOptions::default())
}

pub fn build_empirical_with(
    d: usize,
    k: usize,
    batch: &SampleBatch,
    opts: EmpiricalOptions,
) -> Result<PreferenceTensor> {
    if batch.model != Model::Bernoulli {
        return Err(Error::InvalidParameter("empirical tensor needs a Bernoulli batch".into()));
    }
    if (batch.d, batch.k) != (d, k) {
        return Err(Error::DimensionMismatch {
            what: "batch shape",
            expected: d * k,
            found: batch.d * batch.k,
        });
    }
    let mut tally = CellTally::new(d, k);
    for (q, y) in &batch.samples {
        Query::new(q.i1, q.i2, q.j, d, k)?;
        tally.add(*q, *y);
    }
    tally.tensor(opts.strict_empirical)
}

/// Plug-in estimate on a fresh sample: winner of the empirical tensor and
/// its suboptimality measured on the true tensor.
#[derive(Debug, Clone)]
pub struct PlugIn {
    pub report: SolveReport,
    pub delta_p: f64,
}

/// Samples `n` comparisons from `truth`, solves the empirical instance and
/// evaluates the estimate on the truth.
pub fn plug_in_estimate(
    set: &TargetSet,
    norm: NormSpec,
    truth: &PreferenceTensor,
    n: usize,
    seed: u64,
) -> Result<PlugIn> {
    let ctx = ValueContext::new(truth.clone(), set.clone(), norm)?;
    let opt = solve_exact(&ctx)?.value;
    plug_in_against(&ctx, opt, n, seed)
}

/// As [`plug_in_estimate`] with the true optimum already known.
pub fn plug_in_against(truth: &ValueContext, opt_value: f64, n: usize, seed: u64) -> Result<PlugIn> {
    let (d, k) = (truth.d(), truth.k());
    check_pairs(d)?;
    let mut rng = rng_from_seed(seed);
    let mut tally = CellTally::new(d, k);
    for _ in 0..n {
        let q = draw_query(d, k, &mut rng);
        let y = observe_bernoulli(&truth.tensor, q, &mut rng);
        tally.add(q, y);
    }
    let estimate = truth.with_tensor(tally.tensor(false)?)?;
    let mut report = solve_exact(&estimate)?;
    report.seed = Some(seed);
    let delta_p = truth.suboptimality(&report.winner, opt_value)?;
    Ok(PlugIn { report, delta_p })
}

/// Normal responses `y ~ N(A(i1, i2), sigma^2(i1, i2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    a: SquareMatrix,
    var: SquareMatrix,
}

impl GaussianModel {
    /// Variances default to the Bernoulli ones, `A (1 - A)`.
    pub fn new(a: SquareMatrix) -> Result<Self> {
        let var = SquareMatrix::from_fn(a.dim(), |r, c| {
            let x = a.get(r, c);
            x * (1.0 - x)
        });
        Self::with_variances(a, var)
    }

    pub fn with_variances(a: SquareMatrix, var: SquareMatrix) -> Result<Self> {
        if a.dim() != var.dim() {
            return Err(Error::DimensionMismatch {
                what: "variance matrix",
                expected: a.dim(),
                found: var.dim(),
            });
        }
        check_pairs(a.dim())?;
        for r in 0..a.dim() {
            for c in 0..a.dim() {
                let (x, v) = (a.get(r, c), var.get(r, c));
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidParameter(format!("payoff {x} outside [0, 1]")));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!("variance {v} outside [0, 1]")));
                }
            }
        }
        Ok(Self { a, var })
    }

    pub fn payoff(&self) -> &SquareMatrix {
        &self.a
    }

    pub fn variances(&self) -> &SquareMatrix {
        &self.var
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

pub fn observe_gaussian(m: &GaussianModel, i1: usize, i2: usize, rng: &mut TrialRng) -> f64 {
    let mean = m.a.get(i1, i2);
    let sd = m.var.get(i1, i2).sqrt();
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("finite mean and sd").sample(rng)
}

/// Empirical payoff matrix from `n` ordered-pair samples. For a preference
/// matrix each response also informs the mirrored cell (`1 - y` for
/// `(i2, i1)`) and the diagonal stays 1/2, so the estimate is again a
/// preference matrix; other payoffs use plain cell means. Unsampled cells
/// are 1/2.
pub fn empirical_matrix(m: &GaussianModel, n: usize, rng: &mut TrialRng) -> SquareMatrix {
    let d = m.dim();
    let pooled = m.a.validate_preference().is_ok();
    let mut sum = vec![0.0; d * d];
    let mut count = vec![0u64; d * d];
    for _ in 0..n {
        let (r, c) = (rng.gen_range(0..d), rng.gen_range(0..d));
        let y = observe_gaussian(m, r, c, rng);
        sum[r * d + c] += y;
        count[r * d + c] += 1;
        if pooled && r != c {
            sum[c * d + r] += 1.0 - y;
            count[c * d + r] += 1;
        }
    }
    SquareMatrix::from_fn(d, |r, c| {
        let idx = r * d + c;
        if (pooled && r == c) || count[idx] == 0 {
            0.5
        } else {
            sum[idx] / count[idx] as f64
        }
    })
}

/// `min_i pi^T A e_i`.
fn guarantee(a: &SquareMatrix, pi: &Distribution) -> f64 {
    (0..a.dim())
        .map(|i| a.column_dot(pi.weights(), i))
        .fold(f64::INFINITY, f64::min)
}

/// Plug-in von Neumann winner under the Gaussian model, with its shortfall
/// `min_i pi*^T A e_i - min_i pi_hat^T A e_i` on the true payoff.
pub fn plug_in_nash(m: &GaussianModel, n: usize, seed: u64) -> Result<(SolveReport, f64)> {
    let truth = solve_von_neumann(&m.a)?;
    plug_in_nash_against(m, &truth.winner, n, seed)
}

pub fn plug_in_nash_against(
    m: &GaussianModel,
    pi_star: &Distribution,
    n: usize,
    seed: u64,
) -> Result<(SolveReport, f64)> {
    let mut rng = rng_from_seed(seed);
    let estimate = empirical_matrix(m, n, &mut rng);
    let mut report = solve_von_neumann(&estimate)?;
    report.seed = Some(seed);
    let delta = guarantee(&m.a, pi_star) - guarantee(&m.a, &report.winner);
    Ok((report, delta))
}

/// `max_i sum_r pi_r^2 sigma^2(r, i)`.
pub fn effective_variance(m: &GaussianModel, pi_star: &Distribution) -> Result<f64> {
    if pi_star.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            what: "distribution",
            expected: m.dim(),
            found: pi_star.len(),
        });
    }
    let w = pi_star.weights();
    Ok((0..m.dim())
        .map(|i| (0..m.dim()).map(|r| w[r] * w[r] * m.var.get(r, i)).sum::<f64>())
        .fold(0.0, f64::max))
}
