//! Plain fixed-point iteration `x⁺ = x + βf(x)`.

use crate::error::{Error, Result};
use crate::problem::{
    ConvergenceTrace, FixedPointProblem, SolverConfig, Termination, TraceBuilder,
};
use crate::vector::{axpy, norm2};

/// Only `beta`, `tol` and `max_iters` of the config are used.
pub fn solve<P: FixedPointProblem + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    x0: &[f64],
) -> Result<ConvergenceTrace> {
    config.validate()?;
    problem.check_dim(x0)?;
    let mut trace = TraceBuilder::new(config.tol);
    let mut x = x0.to_vec();
    let mut f = problem.residual(&x)?;
    if trace.push(norm2(&f), None) {
        return Ok(trace.finish(x, Termination::Converged));
    }
    if let Some(step) = trace.non_finite() {
        return Ok(trace.finish(x, Termination::NonFinite { step }));
    }
    for iter in 1..=config.max_iters {
        axpy(config.beta, &f, &mut x);
        f = match problem.residual(&x) {
            Ok(v) => v,
            Err(Error::Domain(message)) => {
                return Ok(trace.finish(
                    x,
                    Termination::DomainError {
                        step: iter,
                        message,
                    },
                ))
            }
            Err(e) => return Err(e),
        };
        if trace.push(norm2(&f), None) {
            return Ok(trace.finish(x, Termination::Converged));
        }
        if let Some(step) = trace.non_finite() {
            return Ok(trace.finish(x, Termination::NonFinite { step }));
        }
    }
    Ok(trace.finish(x, Termination::MaxIters))
}
