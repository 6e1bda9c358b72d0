//! Invariant check suites behind `aatgs verify`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linear::{
    check_gmres_equivalence, check_krylov_identities, check_spd_bound, check_symmetric_band,
    gaussian_vec, make_test_operator, OperatorKind,
};
use crate::problems::{
    lj_energy_and_gradient, logreg_loss_and_gradient, LennardJonesSpec, LogRegSpec,
};
use crate::vector::{norm2, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    LinearEquivalence,
    SymmetricBand,
    SpdBound,
    GradientChecks,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::LinearEquivalence,
        Suite::SymmetricBand,
        Suite::SpdBound,
        Suite::GradientChecks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::LinearEquivalence => "linear_equivalence",
            Suite::SymmetricBand => "symmetric_band",
            Suite::SpdBound => "spd_bound",
            Suite::GradientChecks => "gradient_checks",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown verification suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.limit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite={} seed={}", self.suite.name(), self.seed)?;
        for c in &self.checks {
            writeln!(
                f,
                "{} {} value={:.3e} limit={:.1e}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.limit
            )?;
        }
        writeln!(f, "result={}", if self.passed() { "pass" } else { "fail" })
    }
}

/// Relative gap between an analytic gradient and central differences of `value`.
pub fn central_difference_gap<F>(value: F, x: &[f64], grad: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut fd = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let up = value(&probe)?;
        probe[k] = x[k] - h;
        let down = value(&probe)?;
        probe[k] = x[k];
        fd.push((up - down) / (2.0 * h));
    }
    Ok(norm2(&sub(grad, &fd)) / norm2(&fd).max(f64::MIN_POSITIVE))
}

const GRADIENT_POINTS: u64 = 10;

fn gradient_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut worst = 0.0_f64;
    for k in 0..GRADIENT_POINTS {
        let spec = LennardJonesSpec {
            seed: seed.wrapping_add(k),
            ..LennardJonesSpec::default()
        };
        let x = crate::problems::fcc_initial(&spec);
        let (_, g) = lj_energy_and_gradient(&spec, &x)?;
        let gap =
            central_difference_gap(|p| Ok(lj_energy_and_gradient(&spec, p)?.0), &x, &g, 1e-5)?;
        worst = worst.max(gap);
    }
    checks.push(Check::new("lennard_jones_108_gradient", worst, 1e-6));

    let spec = LogRegSpec::synthetic(200, 50, 10, 1e-2, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst = 0.0_f64;
    for _ in 0..GRADIENT_POINTS {
        let theta = gaussian_vec(&mut rng, 50);
        let (_, g) = logreg_loss_and_gradient(&spec, &theta)?;
        let gap = central_difference_gap(
            |p| Ok(logreg_loss_and_gradient(&spec, p)?.0),
            &theta,
            &g,
            1e-5,
        )?;
        worst = worst.max(gap);
    }
    checks.push(Check::new("logistic_200x50_gradient", worst, 1e-6));
    Ok(checks)
}

fn rhs(seed: u64, n: usize) -> Vec<f64> {
    gaussian_vec(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xb0b), n)
}

/// Runs one suite. Results depend only on `seed`.
pub fn run_verification(suite: Suite, seed: u64) -> Result<VerificationReport> {
    let checks = match suite {
        Suite::LinearEquivalence => {
            let n = 50;
            let op = make_test_operator(
                OperatorKind::NonsymmetricRandom {
                    shift: 10.0,
                    spread: 8.0,
                },
                n,
                seed,
            )?;
            let b = rhs(seed, n);
            let x0 = vec![0.0; n];
            let eq = check_gmres_equivalence(&op, &b, &x0, 0.1, 20)?;
            let kr = check_krylov_identities(&op, &b, &x0, 0.1, 20)?;
            vec![
                Check::new("gmres_iterate_gap", eq.max_iterate_gap(), 1e-8),
                Check::new("richardson_gap", eq.max_richardson_gap(), 1e-10),
                Check::new("pairing_gap", kr.pairing_gap, 1e-10),
                Check::new("krylov_gap", kr.krylov_gap, 1e-8),
            ]
        }
        Suite::SymmetricBand => {
            let n = 100;
            let op = make_test_operator(
                OperatorKind::SpdSpectrum {
                    lambda_min: 1.0,
                    lambda_max: 100.0,
                },
                n,
                seed,
            )?;
            let report = check_symmetric_band(&op, &rhs(seed, n), &vec![0.0; n], 2.0 / 101.0, 30)?;
            vec![
                Check::new("band_ratio", report.band_ratio, 1e-8),
                Check::new("theta_tail_ratio", report.theta_ratio, 1e-8),
                Check::new("window3_vs_full_gap", report.window3_gap, 1e-6),
            ]
        }
        Suite::SpdBound => {
            let n = 100;
            let op = make_test_operator(
                OperatorKind::SpdSpectrum {
                    lambda_min: 1.0,
                    lambda_max: 100.0,
                },
                n,
                seed,
            )?;
            let report = check_spd_bound(&op, &rhs(seed, n), &vec![0.0; n], 2.0 / 101.0, 15)?;
            vec![Check::new("residual_over_bound", report.max_ratio(), 1.1)]
        }
        Suite::GradientChecks => gradient_checks(seed)?,
    };
    Ok(VerificationReport {
        suite,
        seed,
        checks,
    })
}
