//! Von Neumann and Blackwell winners for multi-criteria preference data.
//!
//! A [`PreferenceTensor`] holds pairwise win probabilities per criterion.
//! A distribution over objects is scored against every opponent, and the
//! Blackwell winner minimizes the worst-case `l_q` distance of that score
//! vector to a monotone polyhedral [`TargetSet`].
//!
//! ```
//! use blackwell_core::{instances, solvers, NormSpec, TargetSet, ValueContext};
//!
//! let ctx = ValueContext::new(
//!     instances::conflict_example(2, 2)?,
//!     TargetSet::orthant_half(2),
//!     NormSpec::INF,
//! )?;
//! let report = solvers::solve_blackwell_lp(&ctx)?;
//! assert!((report.value - 0.25).abs() < 1e-9);
//! # Ok::<(), blackwell_core::Error>(())
//! ```

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod instances;
pub mod lp;
pub mod objective;
pub mod rng;
pub mod sampling;
pub mod solvers;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{HalfSpace, NormSpec, TargetSet};
pub use objective::{BestResponseSet, ValueContext};
pub use solvers::{Method, SolveReport, SolverParams};
pub use tensor::{Distribution, PreferenceTensor, ScoreVector, SquareMatrix};
