use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aatgs::harness::config::{parse_extended_f64, LogisticData};
use aatgs::harness::{
    run_experiment, run_verification, ExperimentConfig, LogisticSweep, Overrides, Suite,
};
use aatgs::Error;

#[derive(Parser, Debug)]
#[command(
    name = "aatgs",
    version,
    about = "AATGS / Anderson acceleration experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every solver of an experiment and write traces plus a summary.
    Run(RunArgs),
    /// Run invariant check suites; exits 1 if any check fails.
    Verify {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// AATGS iteration counts on logistic regression over a lambda x eta grid.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Replace the solver list with a single solver: aatgs, aa or fixed_point.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    restart_d: Option<usize>,
    #[arg(long, value_parser = parse_extended_f64)]
    eta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the elapsed_ms column.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5])]
    lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_extended_f64,
          default_values_t = [1e1, 1e2, 1e3, 1e4, 1e5, f64::INFINITY])]
    etas: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Madelon feature file; synthetic data is used when absent.
    #[arg(long, requires = "labels")]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 500)]
    dims: usize,
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Parse { .. } => ExitCode::from(2),
        _ => ExitCode::FAILURE,
    }
}

fn run(args: RunArgs) -> Result<(), Error> {
    let base = args
        .config
        .as_deref()
        .map(ExperimentConfig::load)
        .transpose()?;
    let overrides = Overrides {
        problem: args.problem,
        solver: args.solver,
        m: args.m,
        restart_d: args.restart_d,
        eta: args.eta,
        beta: args.beta,
        tol: args.tol,
        max_iters: args.max_iters,
        seed: args.seed,
        out: args.out,
    };
    let mut config = overrides.apply(base)?;
    config.record_timing |= args.timing;
    let result = run_experiment(&config)?;
    print!("{}", result.summary());
    if let Some(dir) = &config.output {
        result.write(dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Error> {
    let data = match (args.features, args.labels) {
        (Some(features), Some(labels)) => LogisticData::Madelon { features, labels },
        _ => LogisticData::Synthetic {
            n_samples: args.samples,
            n_features: args.dims,
            informative: 20,
        },
    };
    let table = LogisticSweep {
        data,
        lambdas: args.lambdas,
        etas: args.etas,
        m: args.m,
        tol: args.tol,
        max_iters: args.max_iters,
        seed: args.seed,
    }
    .run()?;
    print!("{table}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Verify { suite, seed } => {
            let suites = if suite == "all" {
                Ok(Suite::ALL.to_vec())
            } else {
                suite.parse::<Suite>().map(|s| vec![s])
            };
            match suites.and_then(|suites| {
                suites
                    .into_iter()
                    .map(|s| run_verification(s, seed))
                    .collect::<Result<Vec<_>, _>>()
            }) {
                Ok(reports) => {
                    for r in &reports {
                        print!("{r}");
                    }
                    if reports.iter().all(|r| r.passed()) {
                        return ExitCode::SUCCESS;
                    }
                    return ExitCode::FAILURE;
                }
                Err(e) => Err(e),
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    }
}
