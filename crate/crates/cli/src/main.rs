//! `spme-ident`: generate synthetic SPMe datasets, fit them with RAMH
//! MCMC and/or MLE+CRLB, and summarize the results.

mod commands;
mod config;

use clap::{Parser, Subcommand, ValueEnum};
use commands::FitMethod;
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spme-ident",
    about = "Bayesian and frequentist identifiability study for the single particle model with electrolyte",
    version
)]
struct Cli {
    /// Experiment configuration file (TOML); embedded defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Restrict local-excitation work to one point (1-11).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=11))]
    only_point: Option<u64>,

    /// Worker threads for independent jobs (defaults to the core count).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write the synthetic datasets.
    Generate,
    /// Run inference on previously generated datasets.
    Fit {
        /// Which estimator(s) to run.
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
    },
    /// Aggregate fit outputs into the summary table and histogram files.
    Summarize {
        /// Histogram bin count.
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Mcmc,
    Mle,
    Both,
}

impl From<MethodArg> for FitMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mcmc => FitMethod::Mcmc,
            MethodArg::Mle => FitMethod::Mle,
            MethodArg::Both => FitMethod::Both,
        }
    }
}

/// Environment variable overriding the configured output directory.
const OUT_DIR_ENV: &str = "SPME_IDENT_OUT";

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();

    let mut config = match &cli.config {
        None => ExperimentConfig::default(),
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(message) => {
                eprintln!("error: {message}");
                return ExitCode::from(2);
            }
        },
    };
    if let Some(seed) = cli.seed {
        config.seeds.master = seed;
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        config.output.dir = PathBuf::from(dir);
    }
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }

    let only_point = cli.only_point.map(|p| p as usize);
    let result = match cli.command {
        Command::Generate => commands::cmd_generate(&config, only_point),
        Command::Fit { method } => commands::cmd_fit(&config, method.into(), only_point),
        Command::Summarize { bins } => commands::cmd_summarize(&config, bins),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
