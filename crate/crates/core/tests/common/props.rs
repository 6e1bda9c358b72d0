//! Restart-monitor properties, shared by the proptest suite and the acceptance run.

use aatgs::{Aatgs, FnProblem, RestartCause, SolverConfig, Window};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::{gaussian, rel};

pub type PropResult = Result<(), TestCaseError>;

/// `f(x) = b − Ax − γ·tanh(x)` with `A = I + 0.5·G/√n`.
pub fn problem(n: usize, seed: u64) -> FnProblem<impl Fn(&[f64]) -> Vec<f64> + Send + Sync> {
    let g = gaussian(seed, n * n);
    let b = gaussian(seed ^ 0xabc, n);
    let scale = 0.5 / (n as f64).sqrt();
    FnProblem::new("tanh_linear", n, move |x: &[f64]| {
        (0..n)
            .map(|i| {
                let ax: f64 = (0..n).map(|k| g[i * n + k] * scale * x[k]).sum::<f64>() + x[i];
                b[i] - ax - 0.2 * x[i].tanh()
            })
            .collect()
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn config(m: usize, eta: f64, c: f64, d: Option<usize>) -> SolverConfig {
    SolverConfig::new(Window::Bounded(m), 0.5)
        .with_eta(eta)
        .with_error_c(c)
        .with_fixed_restart(d)
}

#[derive(Debug, Clone)]
pub struct Case {
    pub n: usize,
    pub seed: u64,
    pub m: usize,
    pub eta: f64,
    pub c: f64,
    pub d: Option<usize>,
}

pub fn cases(max_log_eta: f64) -> impl Strategy<Value = Case> {
    (
        3usize..10,
        any::<u64>(),
        1usize..6,
        0.0f64..max_log_eta,
        0.1f64..10.0,
        proptest::option::of(1usize..8),
    )
        .prop_map(|(n, seed, m, log_eta, c, d)| Case {
            n,
            seed,
            m,
            eta: 10f64.powf(log_eta),
            c,
            d,
        })
}

/// After any restart (and on the very first step) `w = C‖Δx‖_∞ / s_jj` exactly,
/// and restarts happen exactly when the monitor or the period says so.
pub fn monitor_restarts_from_its_first_term(case: &Case) -> PropResult {
    let p = problem(case.n, case.seed);
    let cfg = config(case.m, case.eta, case.c, case.d);
    let mut run = Aatgs::start(&p, cfg, &vec![0.0; case.n]).unwrap();
    for _ in 0..40 {
        if norm(run.f()) < 1e-10 {
            break;
        }
        let empty_before = run.basis().is_empty();
        let x_before = run.x().to_vec();
        let Ok(report) = run.step() else { break };
        if empty_before || report.breakdown_restart {
            prop_assert_eq!(
                report.monitor_w.to_bits(),
                (case.c * report.delta_x_inf_norm / report.s_jj).to_bits()
            );
        }
        match report.restart {
            Some(RestartCause::Monitor) => prop_assert!(report.monitor_w > case.eta),
            Some(RestartCause::FixedPeriod) => prop_assert!(case.d.is_some()),
            None => prop_assert!(report.monitor_w <= case.eta),
        }
        if report.restart.is_some() {
            prop_assert!(run.basis().is_empty() && run.monitor().is_empty());
            prop_assert_eq!(run.x_prev(), &x_before[..]);
            prop_assert_eq!(run.x(), &report.combined.next[..]);
        } else {
            prop_assert_eq!(run.basis().len(), run.monitor().len());
        }
    }
    Ok(())
}

pub fn infinite_threshold_never_restarts(case: &Case) -> PropResult {
    let p = problem(case.n, case.seed);
    let cfg = config(case.m, f64::INFINITY, case.c, None);
    let mut run = Aatgs::start(&p, cfg, &vec![0.0; case.n]).unwrap();
    for _ in 0..40 {
        if norm(run.f()) < 1e-10 {
            break;
        }
        let Ok(report) = run.step() else { break };
        prop_assert!(report.restart.is_none());
    }
    Ok(())
}

pub fn after_a_restart_the_run_is_a_fresh_start(case: &Case) -> PropResult {
    fresh_start_check(case).map(|_| ())
}

/// Runs to the first restart, then compares the rest of the run with a solver
/// started from the two retained iterates. `Ok(false)` if no restart happened.
pub fn fresh_start_check(case: &Case) -> Result<bool, TestCaseError> {
    let p = problem(case.n, case.seed);
    let cfg = config(case.m, case.eta, case.c, case.d.map(|d| d + 1));
    let mut run = Aatgs::start(&p, cfg.clone(), &vec![0.0; case.n]).unwrap();
    let mut restarted = false;
    for _ in 0..30 {
        if norm(run.f()) < 1e-10 {
            break;
        }
        let Ok(report) = run.step() else { break };
        if report.restart.is_some() {
            restarted = true;
            break;
        }
    }
    if !restarted {
        return Ok(false);
    }
    let mut fresh = Aatgs::from_pair(&p, cfg, run.x_prev(), run.x()).unwrap();
    for _ in 0..15 {
        if norm(run.f()) < 1e-10 {
            break;
        }
        match (run.step(), fresh.step()) {
            (Ok(a), Ok(b)) => {
                prop_assert!(rel(run.x(), fresh.x()) <= 1e-12);
                prop_assert_eq!(a.restart, b.restart);
                prop_assert_eq!(a.monitor_w.to_bits(), b.monitor_w.to_bits());
            }
            (Err(_), Err(_)) => break,
            _ => prop_assert!(false, "only one of the runs broke down"),
        }
    }
    Ok(true)
}
