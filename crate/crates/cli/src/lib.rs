//! Batch front-end for the `invcert` solver.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{ConfigError, Format, RunConfig};

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "INVCERT_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "invcert",
    version,
    about = "Approximate (s, S) inventory policies with certified error bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the approximate policy and its cutoffs.
    Solve(RunArgs),
    /// Compute the policy together with its error certificate at x0.
    Certify(RunArgs),
    /// Monte-Carlo estimate of the policy's expected cost from x0.
    Simulate(RunArgs),
    /// Cross-check the certificate against simulation, a fine-grid reference,
    /// and exact DP when demands are discrete on the grid.
    Check(RunArgs),
    /// Certificate for a sequence of grid steps.
    Converge(ConvergeArgs),
    /// Parse and validate a configuration without solving.
    Validate(RunArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Configuration file.
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "example",
        required_unless_present = "example"
    )]
    pub config: Option<PathBuf>,
    /// Bundled configuration: three-period, truncated-normal, uniform, gamma.
    #[arg(long, value_name = "NAME")]
    pub example: Option<String>,
    /// Grid step.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Initial inventory.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo replications.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Grid step of the fine reference solve (must be below --theta).
    #[arg(long)]
    pub theta_ref: Option<f64>,
    /// Keep only the first N periods.
    #[arg(long, value_name = "N")]
    pub horizon: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated grid steps (default: theta, theta/2, theta/4, theta/8).
    #[arg(long, value_delimiter = ',')]
    pub thetas: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(invcert::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// 1 for input and validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Config { .. }
            | CliError::Io(_)
            | CliError::Invalid(_) => 1,
            CliError::Numerical(_) | CliError::CheckFailed(_) => 2,
        }
    }
}

impl From<invcert::Error> for CliError {
    fn from(e: invcert::Error) -> Self {
        use invcert::Error as E;
        match e {
            E::Validation(_) | E::InvalidDemand(_) | E::InvalidStep(_) => {
                CliError::Invalid(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }
}

/// Reads the configuration named by `args` and applies command-line overrides.
pub fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let (label, text) = match (&args.config, &args.example) {
        (Some(path), _) => (path.display().to_string(), std::fs::read_to_string(path)?),
        (None, Some(name)) => {
            let text = config::bundled(name).ok_or_else(|| {
                let names: Vec<&str> = config::BUNDLED.iter().map(|b| b.0).collect();
                CliError::Usage(format!(
                    "unknown example '{name}' (available: {})",
                    names.join(", ")
                ))
            })?;
            (name.clone(), text.to_string())
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --config or --example is required".into(),
            ))
        }
    };
    let mut cfg = config::parse(&text).map_err(|source| CliError::Config {
        path: label,
        source,
    })?;
    if let Some(n) = args.horizon {
        if n == 0 || n > cfg.problem.horizon() {
            return Err(CliError::Usage(format!(
                "--horizon {n} must lie in 1..={}",
                cfg.problem.horizon()
            )));
        }
        cfg.problem.periods.truncate(n);
    }
    if args.theta.is_some() {
        cfg.theta = args.theta;
    }
    if args.theta_ref.is_some() {
        cfg.theta_ref = args.theta_ref;
    }
    if let Some(x0) = args.x0 {
        cfg.x0 = x0;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    if let Some(format) = args.format {
        cfg.format = format;
    }
    cfg.check().map_err(CliError::Invalid)?;
    Ok(cfg)
}

/// Runs one command, writing its report to stdout or `--out`.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let (args, outcome) = match &cli.command {
        Command::Solve(a) => (a, commands::cmd_solve(&load_config(a)?)?),
        Command::Certify(a) => (a, commands::cmd_certify(&load_config(a)?)?),
        Command::Simulate(a) => (a, commands::cmd_simulate(&load_config(a)?)?),
        Command::Check(a) => (a, commands::cmd_check(&load_config(a)?)?),
        Command::Converge(c) => (
            &c.run,
            commands::cmd_converge(&load_config(&c.run)?, &c.thetas)?,
        ),
        Command::Validate(a) => (a, commands::cmd_validate(&load_config(a)?)?),
    };
    match &args.out {
        Some(path) => std::fs::write(path, &outcome.text)?,
        None => print!("{}", outcome.text),
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
