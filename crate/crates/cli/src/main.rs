//! `blackwell`: solve, estimate and experiment with multi-criteria
//! preference tensors.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 solver failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use blackwell_core::experiments::{
    binomial_test, check_curve, convergence_trace, kink_budget, mixture_lipschitz, sweep_sample_complexity,
    value_curve, write_trace_csv, IterativeMethod, InstanceSpec, MixtureFamily, SweepConfig, SweepSolver,
};
use blackwell_core::instances;
use blackwell_core::solvers::{solve_exact, solve_first_order, solve_zeroth_order};
use blackwell_core::verify::invariant_suite;
use blackwell_core::{Error, NormSpec, PreferenceTensor, SolverParams, TargetSet, ValueContext};

#[derive(Parser)]
#[command(name = "blackwell", version, about = "Von Neumann and Blackwell winners of preference tensors")]
struct Cli {
    /// Output file (a directory for `instance`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Lp,
    Fo,
    Zo,
}

#[derive(clap::Args)]
struct Problem {
    /// Tensor JSON file.
    tensor: PathBuf,
    /// Target-set JSON file; `[1/2, 1]^k` when omitted.
    set: Option<PathBuf>,
    /// `1`, `2`, any `q > 1`, or `inf`.
    #[arg(long, default_value = "inf")]
    norm: NormSpec,
    /// Accept tensors that fail validation.
    #[arg(long)]
    allow_invalid: bool,
}

impl Problem {
    fn context(&self) -> anyhow::Result<ValueContext> {
        let tensor = PreferenceTensor::load(&self.tensor, self.allow_invalid)
            .with_context(|| format!("loading {}", self.tensor.display()))?;
        let set = match &self.set {
            Some(p) => TargetSet::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => TargetSet::orthant_half(tensor.k()),
        };
        Ok(ValueContext::new(tensor, set, self.norm)?)
    }
}

#[derive(clap::Args)]
struct Iterative {
    #[arg(long = "T", default_value_t = 10_000)]
    t: usize,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Scale of the default step size and smoothing radius.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a winner.
    Solve {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_enum, default_value_t = MethodArg::Lp)]
        method: MethodArg,
        #[command(flatten)]
        iterative: Iterative,
        /// Record the value of every iterate (CSV output writes the trace).
        #[arg(long)]
        trace: bool,
    },
    /// Plug-in estimates from sampled comparisons against the tensor as truth.
    Estimate {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Sample-complexity sweep from a JSON config.
    Sweep { config: PathBuf },
    /// Gap of the averaged iterate against the exact optimum over a T grid.
    Trace {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_enum, default_value_t = MethodArg::Fo)]
        method: MethodArg,
        #[arg(long = "T", value_delimiter = ',', default_value = "100,1000,10000")]
        t_grid: Vec<usize>,
        /// Number of seeds, starting from `--seed`.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Exact value along the mixture `(1 - delta) P_{0,0} + delta P_{alpha0,beta0}`.
    Curve {
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
        alpha0: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = -0.5)]
        beta0: f64,
        /// First criterion (1-based).
        #[arg(long, default_value_t = 1)]
        j1: usize,
        /// Second criterion (1-based).
        #[arg(long, default_value_t = 2)]
        j2: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1001)]
        points: usize,
        /// Target-set JSON file; `[1/2, 1]^k` when omitted.
        #[arg(long)]
        set: Option<PathBuf>,
    },
    /// Write a named construction as `tensor.json` and `set.json`.
    Instance {
        #[arg(value_enum)]
        name: InstanceName,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.25)]
        gamma: f64,
    },
    /// Run the randomized invariant suite; exits 0 iff every family passes.
    Verify {
        #[arg(long, default_value_t = 200)]
        cases: usize,
    },
    /// One-sided exact binomial test `P(X <= x)` for `X ~ Bin(n, p0)`.
    BinomTest { n: u64, x: u64, p0: f64 },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InstanceName {
    /// The 2x2x2 conflict pair.
    TwoEx,
    Conflict,
    AllHalf,
    LecamP0,
    LecamP1,
    /// Cyclic rock-paper-scissors as a one-criterion tensor (odd `--d`).
    Rps,
    /// Five baseline policies of the driving study with `S2`.
    Driving,
}

/// Bad command-line input detected after parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::NonConvergence { .. }
            | Error::Infeasible
            | Error::Unbounded
            | Error::PivotBreakdown(_)
            | Error::Inconsistent(_),
        ) => 3,
        Some(Error::Unsupported(_)) => 1,
        _ => 2,
    }
}

struct Output<'a> {
    path: Option<&'a Path>,
    format: Format,
}

impl Output<'_> {
    fn write_bytes(&self, bytes: &[u8]) -> anyhow::Result<()> {
        match self.path {
            Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?,
            None => io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }

    fn json<T: Serialize>(&self, value: &T) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_bytes(s.as_bytes())
    }

    fn emit<T: Serialize>(&self, value: &T, csv: impl FnOnce(&mut Vec<u8>) -> anyhow::Result<()>) -> anyhow::Result<()> {
        match self.format {
            Format::Json => self.json(value),
            Format::Csv => {
                let mut buf = Vec::new();
                csv(&mut buf)?;
                self.write_bytes(&buf)
            }
        }
    }
}

fn params(it: &Iterative, seed: u64, record_trace: bool) -> anyhow::Result<SolverParams> {
    let p = SolverParams {
        t: it.t,
        eta: it.eta,
        delta: it.delta,
        c: it.c,
        seed,
        record_trace,
    };
    p.validate().map_err(|e| usage(e.to_string()))?;
    Ok(p)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out = Output {
        path: cli.out.as_deref(),
        format: cli.format,
    };
    match cli.command {
        Command::Solve {
            problem,
            method,
            iterative,
            trace,
        } => {
            let ctx = problem.context()?;
            let report = match method {
                MethodArg::Lp => solve_exact(&ctx)?,
                MethodArg::Fo => solve_first_order(&ctx, &params(&iterative, cli.seed, trace)?)?,
                MethodArg::Zo => solve_zeroth_order(&ctx, &params(&iterative, cli.seed, trace)?)?,
            };
            if out.format == Format::Csv && report.trace.is_none() {
                return Err(usage("CSV output of `solve` is the trace; pass --trace with --method fo|zo"));
            }
            out.emit(&report, |buf| Ok(report.write_trace_csv(buf)?))
        }
        Command::Estimate { problem, n, trials } => {
            let cfg = SweepConfig {
                instance: InstanceSpec::Files {
                    tensor: problem.tensor.clone(),
                    set: problem.set.clone(),
                },
                set: None,
                norm: problem.norm,
                n_grid: vec![n],
                trials,
                seed: cli.seed,
                solver: SweepSolver::Exact,
                output: None,
            };
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            let res = sweep_sample_complexity(&cfg)?;
            out.emit(&res, |buf| Ok(res.write_csv(buf)?))
        }
        Command::Sweep { config } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg: SweepConfig = serde_json::from_str(&text)
                .map_err(Error::from)
                .with_context(|| format!("parsing {}", config.display()))?;
            cfg.validate()?;
            let res = sweep_sample_complexity(&cfg)?;
            let target = cli.out.clone().or(cfg.output.clone());
            let out = Output {
                path: target.as_deref(),
                format: cli.format,
            };
            out.emit(&res, |buf| Ok(res.write_csv(buf)?))
        }
        Command::Trace {
            problem,
            method,
            t_grid,
            seeds,
        } => {
            let method = match method {
                MethodArg::Fo => IterativeMethod::FirstOrder,
                MethodArg::Zo => IterativeMethod::ZerothOrder,
                MethodArg::Lp => return Err(usage("trace needs an iterative method (fo or zo)")),
            };
            if t_grid.is_empty() || t_grid.contains(&0) || seeds == 0 {
                return Err(usage("T grid entries and seed count must be positive"));
            }
            let ctx = problem.context()?;
            let seeds: Vec<u64> = (0..seeds).map(|s| cli.seed.wrapping_add(s)).collect();
            let points = convergence_trace(&ctx, method, &t_grid, &seeds)?;
            out.emit(&points, |buf| Ok(write_trace_csv(&points, buf)?))
        }
        Command::Curve {
            alpha0,
            beta0,
            j1,
            j2,
            k,
            points,
            set,
        } => {
            if j1 == 0 || j2 == 0 {
                return Err(usage("criteria are numbered from 1"));
            }
            let family = MixtureFamily {
                alpha0,
                beta0,
                j1: j1 - 1,
                j2: j2 - 1,
                k,
            };
            let set = match set {
                Some(p) => TargetSet::load(&p).with_context(|| format!("loading {}", p.display()))?,
                None => TargetSet::orthant_half(k),
            };
            let curve = value_curve(&family, &set, points)?;
            let check = check_curve(&curve, mixture_lipschitz(&family));
            let report = CurveReport {
                passes: check.passes(kink_budget(&set)),
                kink_budget: kink_budget(&set),
                check,
                curve: curve.clone(),
            };
            out.emit(&report, |buf| {
                let mut w = csv_writer(buf);
                w.write_record(["delta", "value"])?;
                for (d, v) in &curve {
                    w.write_record([d.to_string(), v.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })
        }
        Command::Instance { name, d, k, gamma } => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let (tensor, set) = build_instance(name, d, k, gamma)?;
            tensor.save(dir.join("tensor.json"))?;
            set.save(dir.join("set.json"))?;
            eprintln!("wrote {} and {}", dir.join("tensor.json").display(), dir.join("set.json").display());
            Ok(())
        }
        Command::Verify { cases } => {
            let checks = invariant_suite(cli.seed, cases);
            let failed = checks.iter().filter(|c| !c.passed()).count();
            out.emit(&checks, |buf| {
                let mut w = csv_writer(buf);
                w.write_record(["name", "cases", "failures", "detail"])?;
                for c in &checks {
                    w.write_record([
                        c.name.to_string(),
                        c.cases.to_string(),
                        c.failures.to_string(),
                        c.detail.clone().unwrap_or_default(),
                    ])?;
                }
                w.flush()?;
                Ok(())
            })?;
            if failed > 0 {
                bail!(Error::Inconsistent(format!("{failed} property families failed")));
            }
            Ok(())
        }
        Command::BinomTest { n, x, p0 } => {
            let p = binomial_test(n, x, p0).map_err(|e| usage(e.to_string()))?;
            let row = BinomRow { n, x, p0, p_value: p };
            out.emit(&row, |buf| {
                let mut w = csv_writer(buf);
                w.serialize(&row)?;
                w.flush()?;
                Ok(())
            })
        }
    }
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::Writer::from_writer(buf)
}

#[derive(Serialize)]
struct CurveReport {
    passes: bool,
    kink_budget: usize,
    check: blackwell_core::experiments::CurveCheck,
    curve: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct BinomRow {
    n: u64,
    x: u64,
    p0: f64,
    p_value: f64,
}

fn build_instance(name: InstanceName, d: usize, k: usize, gamma: f64) -> anyhow::Result<(PreferenceTensor, TargetSet)> {
    let half = |t: PreferenceTensor| {
        let k = t.k();
        (t, TargetSet::orthant_half(k))
    };
    let spec = match name {
        InstanceName::TwoEx => InstanceSpec::Conflict { d: 2, k: 2 },
        InstanceName::Conflict => InstanceSpec::Conflict { d, k },
        InstanceName::AllHalf => InstanceSpec::AllHalf { d, k },
        InstanceName::LecamP0 => InstanceSpec::LecamP0 { d, k, gamma },
        InstanceName::LecamP1 => InstanceSpec::LecamP1 { d, k, gamma },
        InstanceName::Driving => InstanceSpec::Driving,
        InstanceName::Rps => {
            let m = instances::rps_tensor(d).map_err(|e| usage(e.to_string()))?;
            return Ok(half(PreferenceTensor::from_slices(&[m])?));
        }
    };
    spec.build().map_err(|e| match e {
        Error::InvalidParameter(msg) => usage(msg),
        other => anyhow!(other),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&usage("bad flag")), 1);
        assert_eq!(exit_code(&anyhow!(Error::Infeasible)), 3);
        assert_eq!(exit_code(&anyhow!(Error::NonConvergence { sweeps: 1, residual: 1.0 })), 3);
        assert_eq!(exit_code(&anyhow!(Error::MissingEntry { j: 0, i1: 0, i2: 1 }).context("loading")), 2);
        assert_eq!(exit_code(&anyhow!("plain")), 2);
    }
}
