use thiserror::Error;

use crate::tensor::Violation;

/// Errors produced by the library. Diagnostics that are not failures
/// (tensor validation, best-response sets) are returned as values instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for {len} objects")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("weights are not on the simplex (sum {sum}, min {min})")]
    NotOnSimplex { sum: f64, min: f64 },

    #[error("invalid preference tensor: {} violated triples, first at {:?}", .0.len(), .0.first())]
    InvalidTensor(Vec<Violation>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing upper-triangular entry (criterion {j}, pair {i1},{i2})")]
    MissingEntry { j: usize, i1: usize, i2: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("projection did not converge after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex pivot breakdown: {0}")]
    PivotBreakdown(String),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("corrupted data bundle {name}: checksum {found} != {expected}")]
    Checksum {
        name: String,
        expected: String,
        found: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
