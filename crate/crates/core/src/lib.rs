//! Anderson acceleration with a truncated Gram-Schmidt basis (AATGS), an
//! automatic restart monitor, a classical Anderson baseline, linear-theory
//! oracles, and a set of benchmark fixed-point problems.
//!
//! Every solver seeks a root of `f(x) = g(x) − x` through the
//! [`FixedPointProblem`] trait and reports a [`ConvergenceTrace`].

pub mod anderson;
pub mod error;
pub mod fixed_point;
pub mod harness;
pub mod linear;
pub mod problem;
pub mod problems;
pub mod solver;
pub mod tgs;
pub mod vector;

pub use error::{Error, Result};
pub use problem::{
    ConvergenceTrace, FixedPointProblem, FnProblem, IterationRecord, SolverConfig, Termination,
    Window,
};
pub use solver::{Aatgs, MonitorState, RestartCause, StepReport};
pub use tgs::PairedBasis;
