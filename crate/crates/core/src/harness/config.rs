//! Experiment configuration: a JSON document plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::problem::{FixedPointProblem, SolverConfig, Window};
use crate::problems::{
    load_madelon, BilinearGame, BilinearGameSpec, BratuProblem, BratuSpec, HEquationProblem,
    HEquationSpec, LennardJonesProblem, LennardJonesSpec, LogRegSpec, LogisticProblem,
};

/// Derives an independent seed for a named consumer from the experiment seed
/// (SplitMix64 finalizer over the seed mixed with an FNV-1a hash of the name).
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `f64` that also accepts the strings `"inf"`/`"infinity"` in JSON.
mod extended_f64 {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn parse(text: &str) -> std::result::Result<f64, String> {
        match text.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|e| format!("{text:?} is not a number: {e}")),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

pub use extended_f64::parse as parse_extended_f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogisticData {
    Synthetic {
        #[serde(default = "default_samples")]
        n_samples: usize,
        #[serde(default = "default_features")]
        n_features: usize,
        #[serde(default = "default_informative")]
        informative: usize,
    },
    Madelon {
        features: PathBuf,
        labels: PathBuf,
    },
}

fn default_samples() -> usize {
    2000
}
fn default_features() -> usize {
    500
}
fn default_informative() -> usize {
    20
}

/// Problem selection, tagged by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Bratu {
        #[serde(default = "default_grid")]
        grid: usize,
        #[serde(default)]
        alpha: f64,
        #[serde(default = "one")]
        lambda: f64,
    },
    Hequation {
        #[serde(default = "default_h_n")]
        n: usize,
        #[serde(default = "one")]
        omega: f64,
    },
    LennardJones {
        #[serde(default = "default_cells")]
        cells_per_side: usize,
        #[serde(default = "default_perturbation")]
        perturbation: f64,
    },
    Logistic {
        #[serde(default = "default_logistic_data")]
        data: LogisticData,
        #[serde(default = "default_lambda_reg")]
        lambda_reg: f64,
    },
    Bilinear {
        #[serde(default = "default_game_n")]
        n: usize,
        #[serde(default = "default_game_beta")]
        beta_game: f64,
    },
}

fn default_grid() -> usize {
    50
}
fn one() -> f64 {
    1.0
}
fn default_h_n() -> usize {
    1000
}
fn default_cells() -> usize {
    3
}
fn default_perturbation() -> f64 {
    0.05
}
fn default_logistic_data() -> LogisticData {
    LogisticData::Synthetic {
        n_samples: default_samples(),
        n_features: default_features(),
        informative: default_informative(),
    }
}
fn default_lambda_reg() -> f64 {
    1e-2
}
fn default_game_n() -> usize {
    100
}
fn default_game_beta() -> f64 {
    1e-4
}

impl ProblemSpec {
    pub const TAGS: [&'static str; 5] = [
        "bratu",
        "hequation",
        "lennard_jones",
        "logistic",
        "bilinear",
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ProblemSpec::Bratu { .. } => "bratu",
            ProblemSpec::Hequation { .. } => "hequation",
            ProblemSpec::LennardJones { .. } => "lennard_jones",
            ProblemSpec::Logistic { .. } => "logistic",
            ProblemSpec::Bilinear { .. } => "bilinear",
        }
    }

    /// The problem with every parameter at its default.
    pub fn from_tag(tag: &str) -> Result<Self> {
        serde_json::from_value(serde_json::json!({ "type": tag })).map_err(|_| {
            Error::Config(format!(
                "unknown problem {tag:?}; expected one of {}",
                Self::TAGS.join(", ")
            ))
        })
    }

    /// Instantiates the problem. Randomized problems draw from `seed`.
    pub fn build(&self, seed: u64) -> Result<Box<dyn FixedPointProblem>> {
        Ok(match self {
            ProblemSpec::Bratu {
                grid,
                alpha,
                lambda,
            } => Box::new(BratuProblem::new(BratuSpec::new(*grid, *alpha, *lambda)?)),
            ProblemSpec::Hequation { n, omega } => {
                Box::new(HEquationProblem::new(HEquationSpec::new(*n, *omega)?))
            }
            ProblemSpec::LennardJones {
                cells_per_side,
                perturbation,
            } => Box::new(LennardJonesProblem::new(LennardJonesSpec {
                cells_per_side: *cells_per_side,
                perturbation_scale: *perturbation,
                seed,
                ..LennardJonesSpec::default()
            })),
            ProblemSpec::Logistic { data, lambda_reg } => {
                let spec = match data {
                    LogisticData::Synthetic {
                        n_samples,
                        n_features,
                        informative,
                    } => LogRegSpec::synthetic(
                        *n_samples,
                        *n_features,
                        *informative,
                        *lambda_reg,
                        seed,
                    )?,
                    LogisticData::Madelon { features, labels } => {
                        load_madelon(features, labels, *lambda_reg)?
                    }
                };
                Box::new(LogisticProblem::new(spec))
            }
            ProblemSpec::Bilinear { n, beta_game } => Box::new(BilinearGame::generate(
                BilinearGameSpec::new(*n, *beta_game, seed)?,
            )?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Aatgs,
    Aa,
    FixedPoint,
}

impl Method {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(text.to_string())).map_err(|_| {
            Error::Config(format!(
                "unknown solver {text:?}; expected aatgs, aa or fixed_point"
            ))
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Aatgs => "AATGS",
            Method::Aa => "AA",
            Method::FixedPoint => "FP",
        })
    }
}

fn default_eta() -> f64 {
    1e3
}

/// One solver column of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub method: Method,
    /// Window size; absent means unbounded.
    #[serde(default)]
    pub m: Option<usize>,
    /// Fixed restart period; absent disables it.
    #[serde(default)]
    pub restart_d: Option<usize>,
    #[serde(default = "default_eta", with = "extended_f64")]
    pub eta: f64,
    /// Mixing parameter; absent means the problem default.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "one")]
    pub c: f64,
    /// Second Gram-Schmidt pass in AATGS.
    #[serde(default = "yes")]
    pub reorthogonalize: bool,
}

fn yes() -> bool {
    true
}

impl SolverEntry {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            m: None,
            restart_d: None,
            eta: default_eta(),
            beta: None,
            c: 1.0,
            reorthogonalize: true,
        }
    }

    pub fn window(&self) -> Window {
        self.m.map_or(Window::Unbounded, Window::Bounded)
    }

    /// `AATGS[3,-]`, `AA[20,50]`, `FP`.
    pub fn label(&self) -> String {
        if self.method == Method::FixedPoint {
            return self.method.to_string();
        }
        let m = self.m.map_or("inf".to_string(), |m| m.to_string());
        let d = self.restart_d.map_or("-".to_string(), |d| d.to_string());
        format!("{}[{m},{d}]", self.method)
    }

    pub fn solver_config(&self, default_beta: f64, tol: f64, max_iters: usize) -> SolverConfig {
        SolverConfig::new(self.window(), self.beta.unwrap_or(default_beta))
            .with_eta(self.eta)
            .with_error_c(self.c)
            .with_fixed_restart(self.restart_d)
            .with_tol(tol)
            .with_max_iters(max_iters)
            .with_reorthogonalization(self.reorthogonalize)
    }
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverEntry>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output directory for traces and the summary.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Fill the `elapsed_ms` column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, solvers: Vec<SolverEntry>) -> Self {
        Self {
            problem,
            solvers,
            tol: default_tol(),
            max_iters: default_max_iters(),
            seed: 0,
            output: None,
            record_timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn problem_seed(&self) -> u64 {
        derive_seed(self.seed, "problem")
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::Config("at least one solver is required".into()));
        }
        for entry in &self.solvers {
            entry
                .solver_config(1.0, self.tol, self.max_iters)
                .validate()
                .map_err(|e| Error::Config(format!("{}: {e}", entry.label())))?;
            if let Some(beta) = entry.beta {
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(Error::Config(format!(
                        "{}: beta must be positive",
                        entry.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub problem: Option<String>,
    pub solver: Option<String>,
    pub m: Option<usize>,
    pub restart_d: Option<usize>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Applies the overrides to `base` (or builds a config from scratch).
    ///
    /// `--problem` swaps in that problem with default parameters unless the
    /// base already uses it. `--solver` replaces the solver list with one
    /// entry; otherwise the per-solver flags apply to every entry.
    pub fn apply(&self, base: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
        let mut config = match (base, &self.problem) {
            (Some(mut cfg), Some(tag)) => {
                if cfg.problem.tag() != tag {
                    cfg.problem = ProblemSpec::from_tag(tag)?;
                }
                cfg
            }
            (Some(cfg), None) => cfg,
            (None, Some(tag)) => ExperimentConfig::new(ProblemSpec::from_tag(tag)?, Vec::new()),
            (None, None) => {
                return Err(Error::Config(
                    "either a config file or --problem is required".into(),
                ))
            }
        };
        if let Some(method) = &self.solver {
            config.solvers = vec![SolverEntry::new(Method::parse(method)?)];
        }
        if config.solvers.is_empty() {
            config.solvers.push(SolverEntry::new(Method::Aatgs));
        }
        for entry in &mut config.solvers {
            if self.m.is_some() {
                entry.m = self.m;
            }
            if self.restart_d.is_some() {
                entry.restart_d = self.restart_d;
            }
            if let Some(eta) = self.eta {
                entry.eta = eta;
            }
            if self.beta.is_some() {
                entry.beta = self.beta;
            }
        }
        if let Some(tol) = self.tol {
            config.tol = tol;
        }
        if let Some(n) = self.max_iters {
            config.max_iters = n;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if self.out.is_some() {
            config.output = self.out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}
