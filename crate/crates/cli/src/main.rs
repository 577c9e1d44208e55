//! Batch experiment runner.
//!
//! One subcommand per artifact: `simulate` writes trajectories, `density`
//! evaluates them, `exchangeability` / `freedman` / `characterize` run the
//! verification bench, `canonicalize` reduces affine rate models.
//!
//! Exit codes: 0 when every requested check passes, 1 on a check or runtime
//! failure, 2 on configuration errors. Reports are deterministic byte for
//! byte given the same configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(name = "vrjp", version, about = "Exact simulation and verification of local-time-driven jump processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed override for any randomized subcommand.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Trial-count override for Monte Carlo subcommands.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Tolerance override for pass/fail verdicts.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Output path (report JSON, trajectory JSONL, or CSV).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Experiment configuration: model JSON plus optional per-command
    /// sections.
    #[arg(long, visible_alias = "model")]
    config: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate raw-clock trajectories and write them as JSON lines.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Start vertex override.
        #[arg(long)]
        start: Option<u32>,
        /// Raw-clock horizon override.
        #[arg(long)]
        horizon: Option<f64>,
        /// Jump-cap override.
        #[arg(long)]
        max_jumps: Option<u64>,
    },
    /// Evaluate log densities of stored trajectories as CSV.
    Density {
        #[command(flatten)]
        config: ConfigArg,
        /// Trajectory JSONL produced by `simulate`.
        #[arg(long)]
        traj: PathBuf,
        /// Emit the product/exponent breakdown (reparametrized-clock
        /// trajectories only).
        #[arg(long)]
        breakdown: bool,
    },
    /// Simulate equivalent trajectory pairs and bound their density gap.
    Exchangeability {
        #[command(flatten)]
        config: ConfigArg,
        /// Number of simulated pairs.
        #[arg(long)]
        pairs: Option<u64>,
        /// Raw-clock horizon per simulated trajectory.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Compare discretized-string probabilities for an equivalent pair.
    Freedman {
        #[command(flatten)]
        config: ConfigArg,
        /// First string, comma-separated vertices.
        #[arg(long, value_delimiter = ',')]
        string_a: Option<Vec<u32>>,
        /// Second string, comma-separated vertices.
        #[arg(long, value_delimiter = ',')]
        string_b: Option<Vec<u32>>,
        /// Grid steps to scan, comma-separated.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// |z| beyond which the comparison is rejected.
        #[arg(long)]
        z_threshold: Option<f64>,
    },
    /// Run the analytic and simulation checks and combine the verdicts.
    Characterize {
        #[command(flatten)]
        config: ConfigArg,
        /// Checks to run: lambda, reversibility, exchangeability.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        /// Pairs for the exchangeability check.
        #[arg(long)]
        pairs: Option<u64>,
    },
    /// Reduce an affine rate model to reinforced normal form.
    Canonicalize {
        #[command(flatten)]
        config: ConfigArg,
        /// Pairs for the built-in verification run (0 disables it).
        #[arg(long)]
        pairs: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = config::Overrides {
        seed: cli.seed,
        trials: cli.trials,
        tol: cli.tol,
        out: cli.out,
    };
    let code = match cli.command {
        Command::Simulate {
            config,
            start,
            horizon,
            max_jumps,
        } => commands::simulate(&config.config, &overrides, start, horizon, max_jumps),
        Command::Density {
            config,
            traj,
            breakdown,
        } => commands::density(&config.config, &overrides, &traj, breakdown),
        Command::Exchangeability {
            config,
            pairs,
            horizon,
        } => commands::exchangeability(&config.config, &overrides, pairs, horizon),
        Command::Freedman {
            config,
            string_a,
            string_b,
            grid,
            z_threshold,
        } => commands::freedman(&config.config, &overrides, string_a, string_b, grid, z_threshold),
        Command::Characterize {
            config,
            checks,
            pairs,
        } => commands::characterize(&config.config, &overrides, checks, pairs),
        Command::Canonicalize { config, pairs } => {
            commands::canonicalize(&config.config, &overrides, pairs)
        }
    };
    match code {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.exit_code())
        }
    }
}
