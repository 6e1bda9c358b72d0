//! Classical Anderson acceleration AA(m), the comparison baseline.
//!
//! Keeps the last `m` differences `Δx_i`, `Δf_i` and updates
//!
//! ```text
//! θ  = argmin ‖f − Fθ‖₂
//! x⁺ = x + βf − (X + βF)θ
//! ```
//!
//! The least-squares problem is refactorized from scratch every step.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::problem::{
    ConvergenceTrace, FixedPointProblem, SolverConfig, Termination, TraceBuilder, Window,
};
use crate::vector::{axpy, dot, norm2, sub};

/// Relative cutoff on the pivoted factor diagonal below which directions are dropped.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DifferenceWindow {
    window: Window,
    x_diffs: VecDeque<Vec<f64>>,
    f_diffs: VecDeque<Vec<f64>>,
}

impl DifferenceWindow {
    pub fn new(window: Window) -> Self {
        Self {
            window,
            x_diffs: VecDeque::new(),
            f_diffs: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.x_diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_diffs.is_empty()
    }

    pub fn x_diff(&self, i: usize) -> &[f64] {
        &self.x_diffs[i]
    }

    pub fn f_diff(&self, i: usize) -> &[f64] {
        &self.f_diffs[i]
    }

    /// Appends a difference pair, dropping the oldest one when full.
    pub fn push(&mut self, delta_x: Vec<f64>, delta_f: Vec<f64>) {
        if self.window.is_full(self.len()) {
            self.x_diffs.pop_front();
            self.f_diffs.pop_front();
        }
        self.x_diffs.push_back(delta_x);
        self.f_diffs.push_back(delta_f);
    }

    pub fn clear(&mut self) {
        self.x_diffs.clear();
        self.f_diffs.clear();
    }

    /// Minimizes `‖f − Fθ‖₂` by column-pivoted modified Gram-Schmidt.
    ///
    /// Columns are taken in order of decreasing remaining norm; once the best
    /// remaining norm falls below `RANK_TOL` times the first pivot, the
    /// remaining directions get a zero coefficient.
    pub fn least_squares(&self, f: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut theta = vec![0.0; k];
        if k == 0 {
            return theta;
        }
        let mut cols: Vec<Vec<f64>> = self.f_diffs.iter().cloned().collect();
        let mut rhs = f.to_vec();
        let mut remaining: Vec<usize> = (0..k).collect();
        // r[p] holds row p of the triangular factor over the pivot order.
        let mut order = Vec::with_capacity(k);
        let mut r: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut qtf = Vec::with_capacity(k);
        let mut first_pivot = 0.0;

        while !remaining.is_empty() {
            let (pos, norm) = remaining
                .iter()
                .enumerate()
                .map(|(pos, &c)| (pos, norm2(&cols[c])))
                .fold(
                    (0, -1.0),
                    |best, cand| if cand.1 > best.1 { cand } else { best },
                );
            if order.is_empty() {
                first_pivot = norm;
            }
            if !(norm > RANK_TOL * first_pivot) || norm == 0.0 {
                break;
            }
            let c = remaining.swap_remove(pos);
            let mut q = std::mem::take(&mut cols[c]);
            q.iter_mut().for_each(|v| *v /= norm);

            let mut row = vec![0.0; k];
            row[c] = norm;
            for &other in &remaining {
                let s = dot(&q, &cols[other]);
                axpy(-s, &q, &mut cols[other]);
                row[other] = s;
            }
            let t = dot(&q, &rhs);
            axpy(-t, &q, &mut rhs);
            qtf.push(t);
            order.push(c);
            r.push(row);
        }

        // Back substitution R z = Qᵀf over the retained pivots.
        for p in (0..order.len()).rev() {
            let mut acc = qtf[p];
            for later in &order[p + 1..] {
                acc -= r[p][*later] * theta[*later];
            }
            theta[order[p]] = acc / r[p][order[p]];
        }
        theta
    }
}

/// One AA update. An empty window gives the plain step `x + βf`.
pub fn aa_step(window: &DifferenceWindow, x: &[f64], f: &[f64], beta: f64) -> Result<Vec<f64>> {
    if x.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: f.len(),
        });
    }
    let theta = window.least_squares(f);
    let mut next = x.to_vec();
    axpy(beta, f, &mut next);
    for (i, t) in theta.iter().enumerate() {
        axpy(-t, window.x_diff(i), &mut next);
        axpy(-t * beta, window.f_diff(i), &mut next);
    }
    Ok(next)
}

/// Runs AA(m) with optional fixed-period restart. `config.eta` is ignored.
pub fn solve<P: FixedPointProblem + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    x0: &[f64],
) -> Result<ConvergenceTrace> {
    config.validate()?;
    problem.check_dim(x0)?;
    let mut trace = TraceBuilder::new(config.tol);

    let mut x_prev = x0.to_vec();
    let mut f_prev = problem.residual(&x_prev)?;
    if trace.push(norm2(&f_prev), None) {
        return Ok(trace.finish(x_prev, Termination::Converged));
    }
    if let Some(step) = trace.non_finite() {
        return Ok(trace.finish(x_prev, Termination::NonFinite { step }));
    }
    let mut x = x_prev.clone();
    axpy(config.beta, &f_prev, &mut x);
    let mut f = problem.residual(&x)?;
    if trace.push(norm2(&f), None) {
        return Ok(trace.finish(x, Termination::Converged));
    }
    if let Some(step) = trace.non_finite() {
        return Ok(trace.finish(x, Termination::NonFinite { step }));
    }

    let mut window = DifferenceWindow::new(config.window);
    let mut since_restart = 0;
    for iter in 2..=config.max_iters {
        window.push(sub(&x, &x_prev), sub(&f, &f_prev));
        let next = aa_step(&window, &x, &f, config.beta)?;
        let f_next = match problem.residual(&next) {
            Ok(v) => v,
            Err(Error::Domain(message)) => {
                return Ok(trace.finish(
                    x,
                    Termination::DomainError {
                        step: iter - 1,
                        message,
                    },
                ))
            }
            Err(e) => return Err(e),
        };
        x_prev = std::mem::replace(&mut x, next);
        f_prev = std::mem::replace(&mut f, f_next);

        let done = trace.push(norm2(&f), None);
        since_restart += 1;
        if config.fixed_restart.is_some_and(|d| since_restart >= d) {
            window.clear();
            since_restart = 0;
            trace.mark_restart();
        }
        if done {
            return Ok(trace.finish(x, Termination::Converged));
        }
        if let Some(step) = trace.non_finite() {
            return Ok(trace.finish(x, Termination::NonFinite { step }));
        }
    }
    Ok(trace.finish(x, Termination::MaxIters))
}
