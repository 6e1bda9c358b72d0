//! AATGS(m) iteration with the rounding-error monitor and restarts.
//!
//! Each step appends `(Δf, Δx)` to a [`PairedBasis`], solves the projected
//! least-squares problem with `θ = Qᵀf`, and moves to
//! `x⁺ = (x − Uθ) + β(f − Qθ)`. The scalar recurrence
//!
//! ```text
//! w_j = C‖Δx‖_∞ / s_jj + Σ_i (|s_ij| / s_jj) w_i
//! ```
//!
//! over the retained window bounds the growth of rounding errors in `U`.
//! When `w_j > η`, or when the fixed restart period elapses, both bases are
//! discarded and the next step starts again from the two latest iterates.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::problem::{
    ConvergenceTrace, FixedPointProblem, SolverConfig, Termination, TraceBuilder,
};
use crate::tgs::{AppendedColumn, Combined, PairedBasis};
use crate::vector::{axpy, norm2, norm_inf, sub};

/// Monitor values `w_i`, aligned with the columns of the paired basis.
#[derive(Debug, Clone)]
pub struct MonitorState {
    w: VecDeque<f64>,
    c: f64,
}

impl MonitorState {
    pub fn new(c: f64) -> Self {
        Self {
            w: VecDeque::new(),
            c,
        }
    }

    pub fn constant_c(&self) -> f64 {
        self.c
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.w.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Computes and stores `w_j`. `s_offdiag[k]` must pair with the `k`-th stored value.
    pub fn update(&mut self, s_offdiag: &[f64], s_jj: f64, delta_x_inf_norm: f64) -> f64 {
        debug_assert_eq!(s_offdiag.len(), self.w.len());
        let propagated: f64 = s_offdiag
            .iter()
            .zip(&self.w)
            .map(|(s, w)| s.abs() / s_jj * w)
            .sum();
        let w = self.c * delta_x_inf_norm / s_jj + propagated;
        self.w.push_back(w);
        w
    }

    /// Same as [`update`](Self::update), first dropping the oldest value if the
    /// basis evicted a column for this append.
    pub fn update_with(&mut self, column: &AppendedColumn, delta_x_inf_norm: f64) -> f64 {
        if column.evicted {
            self.evict_oldest();
        }
        self.update(&column.coeffs, column.s_jj, delta_x_inf_norm)
    }

    pub fn evict_oldest(&mut self) {
        self.w.pop_front();
    }

    pub fn clear(&mut self) {
        self.w.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartCause {
    Monitor,
    FixedPeriod,
}

/// Everything produced by one AATGS step, exposed for verification.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Step index `j` (the step that produced `x_{j+1}`).
    pub step: usize,
    pub theta: Vec<f64>,
    pub combined: Combined,
    pub s_jj: f64,
    pub delta_x_inf_norm: f64,
    pub monitor_w: f64,
    /// The new direction broke down and the basis was cleared before retrying.
    pub breakdown_restart: bool,
    /// The basis was cleared after computing `x_{j+1}`.
    pub restart: Option<RestartCause>,
    pub residual_norm: f64,
}

/// Stepwise AATGS driver.
pub struct Aatgs<'a, P: FixedPointProblem + ?Sized> {
    problem: &'a P,
    config: SolverConfig,
    basis: PairedBasis,
    monitor: MonitorState,
    x_prev: Vec<f64>,
    f_prev: Vec<f64>,
    x: Vec<f64>,
    f: Vec<f64>,
    step: usize,
    since_restart: usize,
}

impl<'a, P: FixedPointProblem + ?Sized> Aatgs<'a, P> {
    /// Evaluates `f(x₀)`, takes the initial step `x₁ = x₀ + βf(x₀)` and evaluates `f(x₁)`.
    pub fn start(problem: &'a P, config: SolverConfig, x0: &[f64]) -> Result<Self> {
        config.validate()?;
        let f0 = problem.residual(x0)?;
        let mut x1 = x0.to_vec();
        axpy(config.beta, &f0, &mut x1);
        let f1 = problem.residual(&x1)?;
        Ok(Self::assemble(problem, config, x0.to_vec(), f0, x1, f1))
    }

    /// Starts from two given iterates with an empty basis, as after a restart.
    pub fn from_pair(
        problem: &'a P,
        config: SolverConfig,
        x_prev: &[f64],
        x: &[f64],
    ) -> Result<Self> {
        config.validate()?;
        let f_prev = problem.residual(x_prev)?;
        let f = problem.residual(x)?;
        Ok(Self::assemble(
            problem,
            config,
            x_prev.to_vec(),
            f_prev,
            x.to_vec(),
            f,
        ))
    }

    fn assemble(
        problem: &'a P,
        config: SolverConfig,
        x_prev: Vec<f64>,
        f_prev: Vec<f64>,
        x: Vec<f64>,
        f: Vec<f64>,
    ) -> Self {
        let basis = PairedBasis::new(problem.dim(), config.window)
            .with_reorthogonalization(config.reorthogonalize);
        let monitor = MonitorState::new(config.error_c);
        Self {
            problem,
            config,
            basis,
            monitor,
            x_prev,
            f_prev,
            x,
            f,
            step: 0,
            since_restart: 0,
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn x_prev(&self) -> &[f64] {
        &self.x_prev
    }

    pub fn f_prev(&self) -> &[f64] {
        &self.f_prev
    }

    pub fn basis(&self) -> &PairedBasis {
        &self.basis
    }

    pub fn monitor(&self) -> &MonitorState {
        &self.monitor
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Number of steps taken so far.
    pub fn steps(&self) -> usize {
        self.step
    }

    fn reset(&mut self) {
        self.basis.clear();
        self.monitor.clear();
        self.since_restart = 0;
    }

    /// Performs step `j`, producing `x_{j+1}` and `f_{j+1}`.
    ///
    /// A breakdown with stored directions clears the basis and retries; a
    /// breakdown on an empty basis returns [`Error::Breakdown`] and leaves the
    /// state untouched apart from the cleared basis.
    pub fn step(&mut self) -> Result<StepReport> {
        let j = self.step + 1;
        let dx = sub(&self.x, &self.x_prev);
        let df = sub(&self.f, &self.f_prev);
        let eps = self.config.breakdown_eps;

        let mut breakdown_restart = false;
        let column = match self.basis.append_pair(&df, &dx, eps) {
            Ok(col) => col,
            Err(Error::Breakdown { .. }) if !self.basis.is_empty() => {
                breakdown_restart = true;
                self.reset();
                self.basis
                    .append_pair(&df, &dx, eps)
                    .map_err(|e| with_step(e, j))?
            }
            Err(e) => {
                self.reset();
                return Err(with_step(e, j));
            }
        };
        let dx_inf = norm_inf(&dx);
        let w = self.monitor.update_with(&column, dx_inf);

        let theta = self.basis.project(&self.f);
        let combined = self
            .basis
            .combine(&self.x, &self.f, &theta, self.config.beta)?;
        let f_next = self.problem.residual(&combined.next)?;

        self.x_prev = std::mem::replace(&mut self.x, combined.next.clone());
        self.f_prev = std::mem::replace(&mut self.f, f_next);
        self.step = j;
        self.since_restart += 1;

        let restart = if w > self.config.eta {
            Some(RestartCause::Monitor)
        } else if self
            .config
            .fixed_restart
            .is_some_and(|d| self.since_restart >= d)
        {
            Some(RestartCause::FixedPeriod)
        } else {
            None
        };
        if restart.is_some() {
            self.reset();
        }

        Ok(StepReport {
            step: j,
            theta,
            combined,
            s_jj: column.s_jj,
            delta_x_inf_norm: dx_inf,
            monitor_w: w,
            breakdown_restart,
            restart,
            residual_norm: norm2(&self.f),
        })
    }
}

fn with_step(err: Error, step: usize) -> Error {
    match err {
        Error::Breakdown {
            s_jj, delta_f_norm, ..
        } => Error::Breakdown {
            step,
            s_jj,
            delta_f_norm,
        },
        other => other,
    }
}

/// Runs AATGS(m) with restarts from `x0` until the relative residual drops
/// below `config.tol` or `config.max_iters` iterations are spent.
///
/// Record `k` of the returned trace belongs to `x_k`. A breakdown right after a
/// restart or a residual that cannot be evaluated ends the run with the
/// corresponding [`Termination`] instead of an error.
pub fn solve<P: FixedPointProblem + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    x0: &[f64],
) -> Result<ConvergenceTrace> {
    config.validate()?;
    problem.check_dim(x0)?;
    let mut trace = TraceBuilder::new(config.tol);

    let f0 = problem.residual(x0)?;
    if trace.push(norm2(&f0), None) {
        return Ok(trace.finish(x0.to_vec(), Termination::Converged));
    }
    if let Some(step) = trace.non_finite() {
        return Ok(trace.finish(x0.to_vec(), Termination::NonFinite { step }));
    }
    let mut solver = Aatgs::start(problem, config.clone(), x0)?;
    if trace.push(norm2(solver.f()), None) {
        return Ok(trace.finish(solver.x().to_vec(), Termination::Converged));
    }
    if let Some(step) = trace.non_finite() {
        return Ok(trace.finish(solver.x().to_vec(), Termination::NonFinite { step }));
    }

    let mut iter = 1;
    while iter < config.max_iters {
        let report = match solver.step() {
            Ok(r) => r,
            Err(Error::Breakdown { step, s_jj, .. }) => {
                return Ok(trace.finish(solver.x().to_vec(), Termination::Breakdown { step, s_jj }));
            }
            Err(Error::Domain(message)) => {
                return Ok(trace.finish(
                    solver.x().to_vec(),
                    Termination::DomainError {
                        step: iter,
                        message,
                    },
                ));
            }
            Err(e) => return Err(e),
        };
        iter += 1;
        let done = trace.push(report.residual_norm, Some(report.monitor_w));
        if report.restart.is_some() || report.breakdown_restart {
            trace.mark_restart();
        }
        if done {
            return Ok(trace.finish(solver.x().to_vec(), Termination::Converged));
        }
        if let Some(step) = trace.non_finite() {
            return Ok(trace.finish(solver.x().to_vec(), Termination::NonFinite { step }));
        }
    }
    Ok(trace.finish(solver.x().to_vec(), Termination::MaxIters))
}
