//! L2-regularized logistic regression as a fixed-point problem `f = −∇loss`.
//!
//! ```text
//! loss(θ) = (1/N) Σ log(1 + exp(−y_i x_iᵀθ)) + (λ/2)‖θ‖²
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problem::FixedPointProblem;
use crate::vector::dot;

/// Columns with a standard deviation below this are centered but not scaled.
const CONSTANT_COLUMN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegSpec {
    /// Row-major `n_samples × n_features`, standardized per column.
    features: Vec<f64>,
    n_samples: usize,
    n_features: usize,
    labels: Vec<f64>,
    pub lambda_reg: f64,
}

impl LogRegSpec {
    /// Standardizes `features` column-wise and validates labels.
    pub fn from_raw(
        mut features: Vec<f64>,
        n_samples: usize,
        n_features: usize,
        labels: Vec<f64>,
        lambda_reg: f64,
    ) -> Result<Self> {
        if features.len() != n_samples * n_features {
            return Err(Error::DimensionMismatch {
                expected: n_samples * n_features,
                got: features.len(),
            });
        }
        if labels.len() != n_samples {
            return Err(Error::RowCountMismatch {
                features: n_samples,
                labels: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} is not +1 or -1"
            )));
        }
        standardize(&mut features, n_samples, n_features);
        Ok(Self {
            features,
            n_samples,
            n_features,
            labels,
            lambda_reg,
        })
    }

    /// Two overlapping Gaussian classes shaped like the Madelon training set:
    /// a few informative directions and many pure-noise features.
    pub fn synthetic(
        n_samples: usize,
        n_features: usize,
        informative: usize,
        lambda_reg: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let informative = informative.min(n_features);
        let shift: Vec<f64> = (0..n_features)
            .map(|k| {
                if k < informative {
                    let s: f64 = StandardNormal.sample(&mut rng);
                    s / (informative as f64).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let mut labels = Vec::with_capacity(n_samples);
        let mut features = Vec::with_capacity(n_samples * n_features);
        for _ in 0..n_samples {
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            labels.push(y);
            for s in &shift {
                let noise: f64 = StandardNormal.sample(&mut rng);
                features.push(y * s + noise);
            }
        }
        Self::from_raw(features, n_samples, n_features, labels, lambda_reg)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn column_stats(&self, k: usize) -> (f64, f64) {
        column_stats(&self.features, self.n_samples, self.n_features, k)
    }

    pub fn with_lambda(mut self, lambda_reg: f64) -> Self {
        self.lambda_reg = lambda_reg;
        self
    }
}

fn column_stats(features: &[f64], rows: usize, cols: usize, k: usize) -> (f64, f64) {
    let n = rows as f64;
    let mean = (0..rows).map(|i| features[i * cols + k]).sum::<f64>() / n;
    let var = (0..rows)
        .map(|i| (features[i * cols + k] - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

/// Centers every column and scales it to unit population standard deviation.
pub fn standardize(features: &mut [f64], rows: usize, cols: usize) {
    if rows == 0 {
        return;
    }
    for k in 0..cols {
        let (mean, std) = column_stats(features, rows, cols, k);
        let scale = if std < CONSTANT_COLUMN_STD {
            1.0
        } else {
            1.0 / std
        };
        for i in 0..rows {
            let v = &mut features[i * cols + k];
            *v = (*v - mean) * scale;
        }
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `1 / (1 + exp(−t))` without overflow.
fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logreg_loss_and_gradient(spec: &LogRegSpec, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    if theta.len() != spec.n_features {
        return Err(Error::DimensionMismatch {
            expected: spec.n_features,
            got: theta.len(),
        });
    }
    let n = spec.n_samples as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; spec.n_features];
    for (i, y) in spec.labels.iter().enumerate() {
        let row = spec.row(i);
        let margin = y * dot(row, theta);
        loss += softplus(-margin);
        let weight = -y * logistic(-margin) / n;
        for (g, xk) in grad.iter_mut().zip(row) {
            *g += weight * xk;
        }
    }
    loss /= n;
    loss += 0.5 * spec.lambda_reg * dot(theta, theta);
    for (g, t) in grad.iter_mut().zip(theta) {
        *g += spec.lambda_reg * t;
    }
    Ok((loss, grad))
}

fn parse_rows<R: BufRead>(reader: R, file: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| Error::Parse {
                    file: file.to_string(),
                    line: idx + 1,
                    message: format!("{tok:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses UCI-format feature and label streams.
pub fn parse_madelon<R1: BufRead, R2: BufRead>(
    features: R1,
    labels: R2,
    lambda_reg: f64,
) -> Result<LogRegSpec> {
    let rows = parse_rows(features, "features")?;
    let label_rows = parse_rows(labels, "labels")?;
    if rows.len() != label_rows.len() {
        return Err(Error::RowCountMismatch {
            features: rows.len(),
            labels: label_rows.len(),
        });
    }
    let n_features = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * n_features);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n_features {
            return Err(Error::Parse {
                file: "features".into(),
                line: i + 1,
                message: format!("expected {n_features} values, found {}", row.len()),
            });
        }
        flat.extend_from_slice(row);
    }
    let mut ys = Vec::with_capacity(label_rows.len());
    for (i, row) in label_rows.iter().enumerate() {
        match row.as_slice() {
            [y] if *y == 1.0 || *y == -1.0 => ys.push(*y),
            _ => {
                return Err(Error::Parse {
                    file: "labels".into(),
                    line: i + 1,
                    message: format!("expected a single +1/-1 label, found {row:?}"),
                })
            }
        }
    }
    LogRegSpec::from_raw(flat, rows.len(), n_features, ys, lambda_reg)
}

/// Reads `madelon_train.data` / `madelon_train.labels` style files.
pub fn load_madelon(
    feature_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
    lambda_reg: f64,
) -> Result<LogRegSpec> {
    let features = BufReader::new(File::open(feature_path)?);
    let labels = BufReader::new(File::open(label_path)?);
    parse_madelon(features, labels, lambda_reg)
}

#[derive(Debug, Clone)]
pub struct LogisticProblem {
    spec: LogRegSpec,
    name: String,
}

impl LogisticProblem {
    pub fn new(spec: LogRegSpec) -> Self {
        Self {
            name: format!(
                "logistic(N={}, n={}, lambda={})",
                spec.n_samples, spec.n_features, spec.lambda_reg
            ),
            spec,
        }
    }

    pub fn spec(&self) -> &LogRegSpec {
        &self.spec
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        Ok(logreg_loss_and_gradient(&self.spec, theta)?.0)
    }
}

impl FixedPointProblem for LogisticProblem {
    fn dim(&self) -> usize {
        self.spec.n_features
    }

    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (_, mut g) = logreg_loss_and_gradient(&self.spec, x)?;
        g.iter_mut().for_each(|v| *v = -*v);
        Ok(g)
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn zero_parameters_give_log_two() {
        let spec = LogRegSpec::synthetic(40, 5, 2, 0.3, 1).unwrap();
        let (loss, _) = logreg_loss_and_gradient(&spec, &[0.0; 5]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn heavy_regularization_pins_minimizer_to_zero() {
        let spec = LogRegSpec::synthetic(40, 5, 2, 1e6, 1).unwrap();
        let p = LogisticProblem::new(spec);
        let cfg = crate::problem::SolverConfig::new(crate::problem::Window::Bounded(3), 1e-6)
            .with_tol(1e-12)
            .with_max_iters(200);
        let trace = crate::solver::solve(&p, &cfg, &[1.0; 5]).unwrap();
        assert!(trace.converged);
        assert!(crate::vector::norm_inf(&trace.final_x) < 1e-6);
    }

    #[test]
    fn softplus_and_logistic_do_not_overflow() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(logistic(-1000.0), 0.0);
        assert_eq!(logistic(1000.0), 1.0);
    }

    #[test]
    fn standardization_on_small_file() {
        let features = "0 2\n2 0\n2 2\n0 0\n";
        let labels = "1\n-1\n1\n-1\n";
        let spec = parse_madelon(Cursor::new(features), Cursor::new(labels), 0.1).unwrap();
        assert_eq!((spec.n_samples(), spec.n_features()), (4, 2));
        for k in 0..2 {
            let (mean, std) = spec.column_stats(k);
            assert!(mean.abs() <= 1e-10);
            assert!((std - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn three_by_two_file() {
        let spec = parse_madelon(
            Cursor::new("0 2\n2 0\n2 2\n"),
            Cursor::new("1\n-1\n1\n"),
            0.0,
        )
        .unwrap();
        for k in 0..2 {
            let (mean, std) = spec.column_stats(k);
            assert!(mean.abs() <= 1e-10 && (std - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn constant_column_is_centered_only() {
        let spec = parse_madelon(
            Cursor::new("5 1\n5 2\n5 3\n"),
            Cursor::new("1\n1\n-1\n"),
            0.0,
        )
        .unwrap();
        let (mean, std) = spec.column_stats(0);
        assert_eq!((mean, std), (0.0, 0.0));
    }

    #[test]
    fn row_count_mismatch_names_both_counts() {
        let err =
            parse_madelon(Cursor::new("1 2\n3 4\n5 6\n"), Cursor::new("1\n-1\n"), 0.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('3') && msg.contains('2'), "{msg}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err =
            parse_madelon(Cursor::new("1 2\n3 x\n"), Cursor::new("1\n-1\n"), 0.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_madelon(Cursor::new("1 2\n3 4\n"), Cursor::new("1\n0\n"), 0.0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }
}
