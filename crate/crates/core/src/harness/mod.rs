//! Experiment configuration, runs, invariant suites and trace output.

pub mod config;
pub mod emit;
pub mod run;
pub mod verify;

pub use config::{
    derive_seed, ExperimentConfig, LogisticData, Method, Overrides, ProblemSpec, SolverEntry,
};
pub use emit::{emit_trace, trace_csv, TraceMeta, CSV_HEADER};
pub use run::{
    run_experiment, run_solver, ExperimentResult, LogisticSweep, RunOutcome, SummaryTable,
    SweepTable,
};
pub use verify::{run_verification, Suite, VerificationReport};
