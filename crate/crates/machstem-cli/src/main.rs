//! `machstem` — command line driver for the Mach stem amplitude toolkit.
//!
//! Exit codes: 0 success, 2 configuration, 3 resonance, 4 numerical,
//! 5 internal.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use machstem::{MachStemError, Result, ToleranceSet};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "machstem", version, about = "Numerical pipelines for weakly stable hyperbolic boundary value problems (Mach stem amplitude equations)")]
struct Cli {
    /// JSON run configuration; omitted = built-in Euler defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's output_dir; default "out").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent sweep cases.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Seed for the seeded forcing families (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase set, amplitude coefficients and resonance report.
    Analyze,
    /// Integrate the periodic amplitude equation.
    SolvePeriodic,
    /// Integrate the pulse amplitude equation.
    SolvePulse,
    /// Approximate-solution residuals across an epsilon list.
    ResidualSweep,
    /// Periodic-vs-pulse operator distance across a period list.
    LimitStudy,
    /// Compare the full pipeline against the Euler closed forms.
    EulerDemo,
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => config::parse_config(path)?,
        None => {
            let cfg = config::RunConfig::default();
            cfg.validate()?;
            cfg
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if cli.threads == 0 {
        return Err(MachStemError::ValidationError(vec![
            "--threads must be at least 1".into(),
        ]));
    }
    let tol = ToleranceSet::default();
    match cli.command {
        Command::Analyze => commands::analyze(&cfg, &out, &tol),
        Command::SolvePeriodic => commands::solve_periodic_cmd(&cfg, &out, &tol),
        Command::SolvePulse => commands::solve_pulse_cmd(&cfg, &out, &tol),
        Command::ResidualSweep => commands::residual_sweep(&cfg, &out, &tol),
        Command::LimitStudy => commands::limit_study(&cfg, &out, cli.threads, &tol),
        Command::EulerDemo => commands::euler_demo(&cfg, &out, &tol),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
