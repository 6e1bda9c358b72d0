//! Modified Bratu problem on the unit square with zero Dirichlet data,
//! discretized by centered differences:
//!
//! ```text
//! f(v) = A v + h·α B v + h²·λ exp(v)
//! ```
//!
//! `A` is the 5-point stencil `[1, 1, −4, 1, 1]` (the `h²` factor already
//! multiplied through) and `B` the centered first difference in `x` with
//! entries `±1/2`. `A` is symmetric and `B` skew, so `α` sets how far the
//! Jacobian is from symmetric.

use crate::error::{Error, Result};
use crate::problem::FixedPointProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BratuSpec {
    /// Interior points per side; the unknown vector has `grid_interior²` entries.
    pub grid_interior: usize,
    pub alpha: f64,
    pub lambda: f64,
}

impl BratuSpec {
    pub fn new(grid_interior: usize, alpha: f64, lambda: f64) -> Result<Self> {
        if grid_interior < 2 {
            return Err(Error::InvalidParameter(format!(
                "Bratu grid needs at least 2 interior points per side, got {grid_interior}"
            )));
        }
        Ok(Self {
            grid_interior,
            alpha,
            lambda,
        })
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.grid_interior as f64 + 1.0)
    }

    pub fn dim(&self) -> usize {
        self.grid_interior * self.grid_interior
    }
}

/// Evaluates `f(v)`; `v[row * N + col]` is the value at `(x_col, y_row)`.
pub fn bratu_residual(spec: &BratuSpec, v: &[f64]) -> Result<Vec<f64>> {
    let n = spec.grid_interior;
    if v.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: v.len(),
        });
    }
    let h = spec.h();
    let conv = h * spec.alpha * 0.5;
    let source = h * h * spec.lambda;
    let at = |r: usize, c: usize| v[r * n + c];
    let mut out = vec![0.0; v.len()];
    for r in 0..n {
        for c in 0..n {
            let center = at(r, c);
            let west = if c > 0 { at(r, c - 1) } else { 0.0 };
            let east = if c + 1 < n { at(r, c + 1) } else { 0.0 };
            let south = if r > 0 { at(r - 1, c) } else { 0.0 };
            let north = if r + 1 < n { at(r + 1, c) } else { 0.0 };
            out[r * n + c] = west + east + south + north - 4.0 * center
                + conv * (east - west)
                + source * center.exp();
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BratuProblem {
    spec: BratuSpec,
    name: String,
}

impl BratuProblem {
    pub fn new(spec: BratuSpec) -> Self {
        let name = format!(
            "bratu(n={}, alpha={}, lambda={})",
            spec.grid_interior, spec.alpha, spec.lambda
        );
        Self { spec, name }
    }

    pub fn spec(&self) -> &BratuSpec {
        &self.spec
    }
}

impl FixedPointProblem for BratuProblem {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        bratu_residual(&self.spec, x)
    }

    fn name(&self) -> &str {
        &self.name
    }
}
