//! Shared vocabulary: the fixed-point problem abstraction, solver settings and
//! convergence traces.
//!
//! A problem supplies the residual map `f`; solvers iterate on
//! `g(x) = x + βf(x)` and never need `g` as a separate object.

use std::fmt;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::vector::norm2;

/// A nonlinear system `f(x) = 0` posed for fixed-point acceleration.
///
/// Implementations must be pure: two evaluations at the same point return
/// bitwise-identical vectors, and evaluation must be reentrant.
pub trait FixedPointProblem: Send + Sync {
    fn dim(&self) -> usize;

    /// Evaluates `f(x)`. The output has length [`dim`](Self::dim).
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Mixing parameter used when the caller does not choose one.
    fn default_beta(&self) -> f64 {
        1.0
    }

    fn name(&self) -> &str;

    /// Starting point used by the benchmark experiments.
    fn initial_point(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Problem backed by a closure; mostly useful for small analytic cases.
pub struct FnProblem<F> {
    name: String,
    dim: usize,
    default_beta: f64,
    residual: F,
}

impl<F> FnProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, dim: usize, residual: F) -> Self {
        Self {
            name: name.into(),
            dim,
            default_beta: 1.0,
            residual,
        }
    }

    pub fn with_default_beta(mut self, beta: f64) -> Self {
        self.default_beta = beta;
        self
    }
}

impl<F> FixedPointProblem for FnProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let out = (self.residual)(x);
        if out.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: out.len(),
            });
        }
        Ok(out)
    }

    fn default_beta(&self) -> f64 {
        self.default_beta
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// `‖f(x)‖₂ / r0_norm`.
pub fn relative_residual<P: FixedPointProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    r0_norm: f64,
) -> Result<f64> {
    if !(r0_norm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reference residual norm must be positive, got {r0_norm}"
        )));
    }
    let f = problem.residual(x)?;
    Ok(norm2(&f) / r0_norm)
}

/// Number of difference pairs an accelerator keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Bounded(usize),
    Unbounded,
}

impl Window {
    pub fn capacity(self) -> Option<usize> {
        match self {
            Window::Bounded(m) => Some(m),
            Window::Unbounded => None,
        }
    }

    pub fn is_full(self, count: usize) -> bool {
        matches!(self, Window::Bounded(m) if count >= m)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Bounded(m) => write!(f, "{m}"),
            Window::Unbounded => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub window: Window,
    /// Constant mixing parameter β.
    pub beta: f64,
    /// Auto-restart threshold η on the monitor `w_j`; `f64::INFINITY` disables it.
    pub eta: f64,
    /// Constant `C` of the rounding-error model.
    pub error_c: f64,
    /// Clear the basis every `d` steps.
    pub fixed_restart: Option<usize>,
    /// Relative residual stopping tolerance.
    pub tol: f64,
    pub max_iters: usize,
    /// Relative threshold on `s_jj / ‖Δf‖₂` below which the new direction is rejected.
    pub breakdown_eps: f64,
    /// Run Gram-Schmidt twice per append.
    pub reorthogonalize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            window: Window::Unbounded,
            beta: 1.0,
            eta: 1e3,
            error_c: 1.0,
            fixed_restart: None,
            tol: 1e-8,
            max_iters: 1000,
            breakdown_eps: 1e-14,
            reorthogonalize: true,
        }
    }
}

impl SolverConfig {
    pub fn new(window: Window, beta: f64) -> Self {
        Self {
            window,
            beta,
            ..Self::default()
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_error_c(mut self, c: f64) -> Self {
        self.error_c = c;
        self
    }

    pub fn with_fixed_restart(mut self, d: Option<usize>) -> Self {
        self.fixed_restart = d;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_reorthogonalization(mut self, on: bool) -> Self {
        self.reorthogonalize = on;
        self
    }

    /// Disables both restart triggers.
    pub fn without_restart(mut self) -> Self {
        self.eta = f64::INFINITY;
        self.fixed_restart = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.window == Window::Bounded(0) {
            return bad("window size must be at least 1".into());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!(
                "beta must be positive and finite, got {}",
                self.beta
            ));
        }
        if !(self.eta > 0.0) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.error_c > 0.0 && self.error_c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.error_c));
        }
        if self.fixed_restart == Some(0) {
            return bad("fixed restart dimension must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.breakdown_eps > 0.0 && self.breakdown_eps < 1e-3) {
            return bad(format!(
                "breakdown_eps must be small and positive, got {}",
                self.breakdown_eps
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual_norm: f64,
    /// Rounding-error monitor `w_j`; absent for methods without one.
    pub monitor_w: Option<f64>,
    /// The basis was cleared at the end of this iteration.
    pub restarted: bool,
    /// Wall time since the solve started.
    pub elapsed: Duration,
}

/// Why a solve stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    MaxIters,
    /// A direction collapsed right after a restart, so no progress is possible.
    Breakdown {
        step: usize,
        s_jj: f64,
    },
    /// The residual could not be evaluated at the latest iterate.
    DomainError {
        step: usize,
        message: String,
    },
    /// The residual norm overflowed or became NaN.
    NonFinite {
        step: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub final_x: Vec<f64>,
    pub termination: Termination,
}

impl ConvergenceTrace {
    pub fn residual_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual_norm).collect()
    }

    pub fn restart_count(&self) -> usize {
        self.records.iter().filter(|r| r.restarted).count()
    }

    /// Index of the first record whose residual relative to record 0 is at most `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        let r0 = self.records.first()?.residual_norm;
        if r0 == 0.0 {
            return Some(0);
        }
        self.records
            .iter()
            .find(|r| r.residual_norm / r0 <= tol)
            .map(|r| r.iter)
    }

    pub fn last_iter(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }
}

/// Accumulates records and applies the shared stopping rule.
pub(crate) struct TraceBuilder {
    records: Vec<IterationRecord>,
    start: std::time::Instant,
    r0_norm: f64,
    tol: f64,
}

impl TraceBuilder {
    pub(crate) fn new(tol: f64) -> Self {
        Self {
            records: Vec::new(),
            start: std::time::Instant::now(),
            r0_norm: 0.0,
            tol,
        }
    }

    /// Appends a record and reports whether the stopping tolerance is met.
    pub(crate) fn push(&mut self, residual_norm: f64, monitor_w: Option<f64>) -> bool {
        if self.records.is_empty() {
            self.r0_norm = residual_norm;
        }
        self.records.push(IterationRecord {
            iter: self.records.len(),
            residual_norm,
            monitor_w,
            restarted: false,
            elapsed: self.start.elapsed(),
        });
        residual_norm.is_finite() && residual_norm <= self.tol * self.r0_norm
    }

    /// Index of the last record when its residual norm is not finite.
    pub(crate) fn non_finite(&self) -> Option<usize> {
        self.records
            .last()
            .filter(|r| !r.residual_norm.is_finite())
            .map(|r| r.iter)
    }

    pub(crate) fn mark_restart(&mut self) {
        if let Some(last) = self.records.last_mut() {
            last.restarted = true;
        }
    }

    pub(crate) fn finish(self, final_x: Vec<f64>, termination: Termination) -> ConvergenceTrace {
        ConvergenceTrace {
            records: self.records,
            converged: termination == Termination::Converged,
            final_x,
            termination,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shifted(b: Vec<f64>) -> FnProblem<impl Fn(&[f64]) -> Vec<f64> + Send + Sync> {
        let n = b.len();
        FnProblem::new("b-x", n, move |x: &[f64]| {
            b.iter().zip(x).map(|(bi, xi)| bi - xi).collect()
        })
    }

    #[test]
    fn relative_residual_examples() {
        let p = FnProblem::new("1-x", 1, |x: &[f64]| vec![1.0 - x[0]]);
        assert_eq!(relative_residual(&p, &[1.0], 1.0).unwrap(), 0.0);

        let p = shifted(vec![3.0, 4.0]);
        assert_eq!(relative_residual(&p, &[0.0, 0.0], 5.0).unwrap(), 1.0);
        assert!((relative_residual(&p, &[3.0, 0.0], 5.0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn relative_residual_rejects_bad_input() {
        let p = shifted(vec![3.0, 4.0]);
        assert!(matches!(
            relative_residual(&p, &[0.0], 5.0),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(relative_residual(&p, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig::new(Window::Bounded(0), 1.0)
            .validate()
            .is_err());
        assert!(SolverConfig::default().with_tol(1.0).validate().is_err());
        assert!(SolverConfig::default()
            .with_fixed_restart(Some(0))
            .validate()
            .is_err());
        assert!(SolverConfig::new(Window::Unbounded, -1.0)
            .validate()
            .is_err());
        assert!(SolverConfig::default().without_restart().validate().is_ok());
    }

    #[test]
    fn trace_iterations_to() {
        let mut tb = TraceBuilder::new(1e-3);
        assert!(!tb.push(1.0, None));
        assert!(!tb.push(0.1, None));
        assert!(tb.push(1e-4, None));
        let trace = tb.finish(vec![], Termination::Converged);
        assert_eq!(trace.iterations_to(1e-3), Some(2));
        assert_eq!(trace.iterations_to(1e-9), None);
        assert!(trace.converged);
        assert_eq!(
            trace.records.iter().map(|r| r.iter).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }
}
