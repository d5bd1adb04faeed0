//! Winner computation: exact linear programs, a cutting-plane method for
//! smooth norms, exponentiated subgradient descent and a two-point
//! zeroth-order method.

mod exact;
mod first_order;
mod subgradient;
mod zeroth_order;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ValueContext;
use crate::tensor::Distribution;

pub use exact::{
    solve_blackwell_lp, solve_cutting_plane, solve_l1_lp, solve_von_neumann, CUTTING_PLANE_GAP,
    CUTTING_PLANE_MAX_ITERS,
};
pub use first_order::solve_first_order;
pub use subgradient::subgradient;
pub use zeroth_order::solve_zeroth_order;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LpExact,
    CuttingPlane,
    FirstOrder,
    ZerothOrder,
}

impl Method {
    pub fn is_exact(self) -> bool {
        matches!(self, Method::LpExact | Method::CuttingPlane)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub winner: Distribution,
    pub value: f64,
    pub method: Method,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// Value of every iterate `pi_t`, when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<f64>>,
    /// Final iterate of an iterative method; the winner is the average.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub last_iterate: Option<Distribution>,
    /// The LP optimum is not unique.
    #[serde(default)]
    pub alternative_optima: bool,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the trace as CSV with columns `iteration,value`.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let trace = self
            .trace
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("report has no trace".into()))?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "value"])?;
        for (t, v) in trace.iter().enumerate() {
            out.write_record([(t + 1).to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Iterative solver settings. Unset step size and radius fall back to the
/// rates that give the `O(1/sqrt(T))` guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub record_trace: bool,
}

fn default_c() -> f64 {
    1.0
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            t: 10_000,
            eta: None,
            delta: None,
            c: 1.0,
            seed: 0,
            record_trace: false,
        }
    }
}

impl SolverParams {
    pub fn with_t(t: usize) -> Self {
        Self {
            t,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        for (name, v) in [("eta", self.eta), ("delta", self.delta)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("{name}={v} must be positive")));
                }
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c={} must be positive", self.c)));
        }
        Ok(())
    }
}

/// The exact optimum for any norm: an LP for `l_inf` and `l_1`, cutting
/// planes otherwise.
pub fn solve_exact(ctx: &ValueContext) -> Result<SolveReport> {
    if ctx.norm.is_inf() {
        solve_blackwell_lp(ctx)
    } else if ctx.norm.q() == 1.0 {
        solve_l1_lp(ctx)
    } else {
        solve_cutting_plane(ctx)
    }
}

/// Projects `x` onto the simplex by clamping and rescaling; used for LP
/// outputs carrying round-off.
pub(crate) fn clean_distribution(x: &[f64]) -> Result<Distribution> {
    Distribution::normalized(x.to_vec())
}

/// `exp(clamp(x, -700, 700))`.
pub(crate) fn guarded_exp(x: f64) -> f64 {
    x.clamp(-700.0, 700.0).exp()
}

/// Softmax with max-shift; entries of `theta` may be arbitrarily large.
pub(crate) fn softmax(theta: &[f64]) -> Vec<f64> {
    let top = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = theta.iter().map(|t| guarded_exp(t - top)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}
