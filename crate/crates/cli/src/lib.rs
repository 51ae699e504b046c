//! The `cascade` command line: argument parsing, config files and the
//! subcommands that drive the engine and write CSV plot data.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

pub use commands::Outcome;
pub use config::{apply_toml, parse_config, render_config};

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Streaming proxy/oracle cascades")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// TOML experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory for CSV outputs; created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Override one setting, e.g. `--set rho=0.2`. Applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Run seed; shorthand for `--set seed=N`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_defaults: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One run of the configured algorithm.
    Run,
    /// Sweep one parameter over `sweep_values` and seeds.
    Sweep,
    /// Target satisfaction over a (t_p, t_r) grid.
    Reliability,
    /// The same run at each worker count in `parallel_workers`.
    Parallel,
    /// Fit spline and Platt calibration and emit the calibration curve.
    CalibrateDemo,
    /// Write the configured synthetic dataset to a file.
    Generate,
}

/// What `main` should do after a successful parse.
#[derive(Debug)]
pub enum Action {
    Print(String),
    Ran(Outcome),
}

pub fn execute(cli: &Cli) -> Result<Action> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = parse_config(cli.config.as_deref(), &overrides)?;
    if cli.print_defaults {
        return Ok(Action::Print(render_config(&cfg)));
    }
    let Some(command) = cli.command else {
        anyhow::bail!("no subcommand given; see `cascade --help`");
    };
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let outcome = match command {
        Command::Run => commands::run(&cfg, &cli.out),
        Command::Sweep => commands::sweep_cmd(&cfg, &cli.out),
        Command::Reliability => commands::reliability(&cfg, &cli.out),
        Command::Parallel => commands::parallel(&cfg, &cli.out),
        Command::CalibrateDemo => commands::calibrate_demo(&cfg, &cli.out),
        Command::Generate => commands::generate(&cfg, &cli.out),
    }?;
    Ok(Action::Ran(outcome))
}
