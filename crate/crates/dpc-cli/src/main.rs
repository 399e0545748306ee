//! Experiment driver for differentially private counterfactual explanations.
//!
//! Exit codes: 0 on success, 2 for usage/configuration problems, 3 for
//! numeric or training failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpc::error::Error;

use commands::attack::AttackKind;
use config::{DatasetSource, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "dpc",
    version,
    about = "Train a private autoencoder, explain queries with counterfactuals, and measure attack exposure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the privacy budget.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Override the dataset with a CSV file (requires --schema).
    #[arg(long, requires = "schema")]
    dataset: Option<PathBuf>,
    /// Schema file for --dataset.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the private autoencoder and build class prototypes.
    TrainAe(CommonArgs),
    /// Search counterfactuals for a query set; report FR and AD.
    Explain {
        #[command(flatten)]
        common: CommonArgs,
        /// CSV of query rows (defaults to sampling from the dataset).
        #[arg(long)]
        queries: Option<PathBuf>,
    },
    /// Run an attack campaign with both generators side by side.
    Attack {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(value_enum)]
        kind: AttackKind,
    },
    /// One pipeline run per (epsilon, seed); aggregate CSV plus plot data.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Budgets to sweep (defaults to the config's sweep_epsilons).
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
    },
    /// Merge metric and attack files under a directory into one CSV.
    Report { directory: PathBuf },
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
    }
    if let Some(out_dir) = &args.out_dir {
        config.out_dir = out_dir.clone();
    }
    if let Some(epsilon) = args.epsilon {
        config.epsilon = epsilon;
    }
    if let (Some(path), Some(schema)) = (&args.dataset, &args.schema) {
        config.dataset = DatasetSource::Csv {
            path: path.clone(),
            schema: schema.clone(),
        };
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::TrainAe(common) => commands::train_ae::run(&load_config(&common)?),
        Command::Explain { common, queries } => {
            commands::explain::run(&load_config(&common)?, queries.as_deref())
        }
        Command::Attack { common, kind } => commands::attack::run(&load_config(&common)?, kind),
        Command::Sweep { common, epsilons } => {
            commands::sweep::run(&load_config(&common)?, &epsilons)
        }
        Command::Report { directory } => commands::report::run(&directory),
    }
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Parameter(_) | Error::Ingestion { .. } | Error::Format { .. } | Error::Io(_) => 2,
        Error::Numeric(_) | Error::Training { .. } | Error::Structural(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
