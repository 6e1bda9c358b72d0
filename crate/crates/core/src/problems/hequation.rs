//! Chandrasekhar's H-equation on a uniform midpoint grid:
//!
//! ```text
//! f(h)_i = h_i − (1 − ω/(2n) Σ_j μ_i h_j / (μ_i + μ_j))⁻¹,   μ_i = (i − ½)/n
//! ```

use crate::error::{Error, Result};
use crate::problem::FixedPointProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HEquationSpec {
    pub n: usize,
    pub omega: f64,
}

impl HEquationSpec {
    pub fn new(n: usize, omega: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("H-equation needs n >= 1".into()));
        }
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in [0, 1], got {omega}"
            )));
        }
        Ok(Self { n, omega })
    }
}

#[derive(Debug, Clone)]
pub struct HEquationProblem {
    spec: HEquationSpec,
    /// Row-major `ω/(2n) · μ_i / (μ_i + μ_j)`.
    kernel: Vec<f64>,
    name: String,
}

impl HEquationProblem {
    pub fn new(spec: HEquationSpec) -> Self {
        let n = spec.n;
        let mu: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let scale = spec.omega / (2.0 * n as f64);
        let kernel = mu
            .iter()
            .flat_map(|&mi| mu.iter().map(move |&mj| scale * mi / (mi + mj)))
            .collect();
        Self {
            spec,
            kernel,
            name: format!("hequation(n={}, omega={})", n, spec.omega),
        }
    }

    pub fn spec(&self) -> &HEquationSpec {
        &self.spec
    }
}

/// Evaluates `f(h)`, failing when a bracket is not positive.
pub fn hequation_residual(problem: &HEquationProblem, h: &[f64]) -> Result<Vec<f64>> {
    problem.residual(h)
}

impl FixedPointProblem for HEquationProblem {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn residual(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(h)?;
        let n = self.spec.n;
        self.kernel
            .chunks_exact(n)
            .zip(h)
            .enumerate()
            .map(|(i, (row, hi))| {
                let sum: f64 = row.iter().zip(h).map(|(k, hj)| k * hj).sum();
                let bracket = 1.0 - sum;
                if bracket > 0.0 {
                    Ok(hi - 1.0 / bracket)
                } else {
                    Err(Error::Domain(format!(
                        "H-equation bracket {bracket:e} is not positive at component {i}"
                    )))
                }
            })
            .collect()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn initial_point(&self) -> Vec<f64> {
        vec![1.0; self.spec.n]
    }
}
