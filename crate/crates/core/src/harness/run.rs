//! Running experiments and parameter sweeps.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use super::config::{ExperimentConfig, LogisticData, Method, ProblemSpec, SolverEntry};
use super::emit::{emit_trace, termination_label, TraceMeta};
use crate::error::{Error, Result};
use crate::problem::{ConvergenceTrace, FixedPointProblem};
use crate::{anderson, fixed_point, solver};

/// Dispatches one solver entry on `problem` from its default starting point.
pub fn run_solver(
    problem: &dyn FixedPointProblem,
    entry: &SolverEntry,
    tol: f64,
    max_iters: usize,
) -> Result<ConvergenceTrace> {
    let config = entry.solver_config(problem.default_beta(), tol, max_iters);
    let x0 = problem.initial_point();
    match entry.method {
        Method::Aatgs => solver::solve(problem, &config, &x0),
        Method::Aa => anderson::solve(problem, &config, &x0),
        Method::FixedPoint => fixed_point::solve(problem, &config, &x0),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub index: usize,
    pub entry: SolverEntry,
    pub label: String,
    pub trace: ConvergenceTrace,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub problem_name: String,
    pub runs: Vec<RunOutcome>,
}

impl ExperimentResult {
    pub fn summary(&self) -> SummaryTable {
        SummaryTable {
            problem: self.problem_name.clone(),
            tol: self.config.tol,
            rows: self
                .runs
                .iter()
                .map(|run| SummaryRow {
                    label: run.label.clone(),
                    iterations: run.trace.iterations_to(self.config.tol),
                    final_relative_residual: final_relative(&run.trace),
                    restarts: run.trace.restart_count(),
                    termination: termination_label(&run.trace.termination),
                })
                .collect(),
        }
    }

    fn meta(&self, run: &RunOutcome) -> TraceMeta {
        TraceMeta {
            label: run.label.clone(),
            problem: self.problem_name.clone(),
            tol: self.config.tol,
            config: serde_json::json!({
                "experiment": {
                    "problem": self.config.problem,
                    "tol": self.config.tol,
                    "max_iters": self.config.max_iters,
                    "seed": self.config.seed,
                },
                "solver": run.entry,
            }),
            record_timing: self.config.record_timing,
        }
    }

    /// Writes `run<i>.csv`/`run<i>.json` per solver plus `summary.txt` and
    /// `config.json` into `dir`.
    pub fn write(&self, dir: &std::path::Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for run in &self.runs {
            let csv = dir.join(format!("run{:02}.csv", run.index));
            let json = emit_trace(&run.trace, &csv, &self.meta(run))?;
            written.push(csv);
            written.push(json);
        }
        let summary = dir.join("summary.txt");
        fs::write(&summary, self.summary().to_string())?;
        written.push(summary);
        let config = dir.join("config.json");
        fs::write(&config, self.config.to_json() + "\n")?;
        written.push(config);
        Ok(written)
    }
}

fn final_relative(trace: &ConvergenceTrace) -> f64 {
    match (trace.records.first(), trace.records.last()) {
        (Some(a), Some(b)) if a.residual_norm > 0.0 => b.residual_norm / a.residual_norm,
        _ => 0.0,
    }
}

/// Builds the problem once and runs every solver entry, concurrently. Runs are
/// reported in config order regardless of completion order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let problem = config.problem.build(config.problem_seed())?;
    let problem: &dyn FixedPointProblem = problem.as_ref();
    let runs = config
        .solvers
        .par_iter()
        .enumerate()
        .map(|(index, entry)| {
            run_solver(problem, entry, config.tol, config.max_iters).map(|trace| RunOutcome {
                index,
                entry: entry.clone(),
                label: entry.label(),
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        config: config.clone(),
        problem_name: problem.name().to_string(),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    /// `None` when the tolerance was not reached.
    pub iterations: Option<usize>,
    pub final_relative_residual: f64,
    pub restarts: usize,
    pub termination: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub problem: String,
    pub tol: f64,
    pub rows: Vec<SummaryRow>,
}

fn iterations_cell(n: Option<usize>) -> String {
    n.map_or_else(|| "F".to_string(), |n| n.to_string())
}

impl fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem: {}", self.problem)?;
        writeln!(f, "tol: {:e}", self.tol)?;
        writeln!(
            f,
            "{:<16} {:>10} {:>14} {:>9}  termination",
            "solver", "iterations", "final_rel_res", "restarts"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<16} {:>10} {:>14.6e} {:>9}  {}",
                row.label,
                iterations_cell(row.iterations),
                row.final_relative_residual,
                row.restarts,
                row.termination
            )?;
        }
        Ok(())
    }
}

/// AATGS iteration counts over a grid of regularization strengths and thresholds.
#[derive(Debug, Clone)]
pub struct LogisticSweep {
    pub data: LogisticData,
    pub lambdas: Vec<f64>,
    pub etas: Vec<f64>,
    pub m: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for LogisticSweep {
    fn default() -> Self {
        Self {
            data: LogisticData::Synthetic {
                n_samples: 2000,
                n_features: 500,
                informative: 20,
            },
            lambdas: vec![1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            etas: vec![1e1, 1e2, 1e3, 1e4, 1e5, f64::INFINITY],
            m: 3,
            tol: 1e-12,
            max_iters: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub lambdas: Vec<f64>,
    pub etas: Vec<f64>,
    /// `cells[i][k]` is the count for `lambdas[i]`, `etas[k]`.
    pub cells: Vec<Vec<Option<usize>>>,
}

fn power_label(v: f64) -> String {
    if v.is_infinite() {
        return "inf".into();
    }
    let e = v.log10();
    if (e - e.round()).abs() < 1e-12 {
        format!("1e{}", e.round() as i32)
    } else {
        format!("{v:e}")
    }
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<8}", "lambda")?;
        for eta in &self.etas {
            write!(f, " {:>9}", format!("eta={}", power_label(*eta)))?;
        }
        writeln!(f)?;
        for (lambda, row) in self.lambdas.iter().zip(&self.cells) {
            write!(f, "{:<8}", power_label(*lambda))?;
            for cell in row {
                write!(f, " {:>9}", iterations_cell(*cell))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl LogisticSweep {
    pub fn run(&self) -> Result<SweepTable> {
        if self.lambdas.is_empty() || self.etas.is_empty() {
            return Err(Error::Config(
                "sweep needs at least one lambda and one eta".into(),
            ));
        }
        let seed = super::config::derive_seed(self.seed, "problem");
        let cells = self
            .lambdas
            .par_iter()
            .map(|&lambda_reg| {
                let spec = ProblemSpec::Logistic {
                    data: self.data.clone(),
                    lambda_reg,
                };
                let problem = spec.build(seed)?;
                self.etas
                    .iter()
                    .map(|&eta| {
                        let entry = SolverEntry {
                            m: Some(self.m),
                            eta,
                            ..SolverEntry::new(Method::Aatgs)
                        };
                        let trace = run_solver(problem.as_ref(), &entry, self.tol, self.max_iters)?;
                        Ok(trace.iterations_to(self.tol))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepTable {
            lambdas: self.lambdas.clone(),
            etas: self.etas.clone(),
            cells,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FnProblem, SolverConfig, Window};

    #[test]
    fn fixed_point_entry_halves_residual() {
        let p =
            FnProblem::new("one_minus_x", 1, |x: &[f64]| vec![1.0 - x[0]]).with_default_beta(0.5);
        let trace = run_solver(&p, &SolverEntry::new(Method::FixedPoint), 1e-6, 50).unwrap();
        let r = trace.residual_norms();
        for pair in r.windows(2) {
            assert_eq!(pair[1], 0.5 * pair[0]);
        }
        assert_eq!(trace.iterations_to(1e-6), Some(20));
    }

    #[test]
    fn summary_marks_failures() {
        let table = SummaryTable {
            problem: "p".into(),
            tol: 1e-8,
            rows: vec![SummaryRow {
                label: "AA[5,-]".into(),
                iterations: None,
                final_relative_residual: 0.5,
                restarts: 0,
                termination: "max_iters".into(),
            }],
        };
        let text = table.to_string();
        assert!(text.lines().nth(3).unwrap().contains(" F "), "{text}");
    }

    #[test]
    fn sweep_table_layout() {
        let table = SweepTable {
            lambdas: vec![1.0, 1e-1],
            etas: vec![1e3, f64::INFINITY],
            cells: vec![vec![Some(21), Some(22)], vec![None, Some(56)]],
        };
        let text = table.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("eta=1e3") && lines[0].contains("eta=inf"));
        assert!(lines[1].starts_with("1e0"));
        assert!(lines[2].starts_with("1e-1") && lines[2].contains('F'));
    }

    #[test]
    fn solver_entry_maps_to_config() {
        let entry = SolverEntry {
            m: Some(4),
            restart_d: Some(10),
            eta: 5.0,
            c: 2.0,
            ..SolverEntry::new(Method::Aatgs)
        };
        let cfg = entry.solver_config(0.25, 1e-6, 77);
        let expected = SolverConfig::new(Window::Bounded(4), 0.25)
            .with_eta(5.0)
            .with_error_c(2.0)
            .with_fixed_restart(Some(10))
            .with_tol(1e-6)
            .with_max_iters(77);
        assert_eq!(cfg, expected);
    }
}
