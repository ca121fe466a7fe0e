use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use commands::{dispatch, EXIT_CONFIG, EXIT_OK};
use config::{load, resolve, Command, Overrides, RunConfig};

/// Ground states, bound-state branches and solitary-wave evolution for the
/// coupled NLS-KdV system.
#[derive(Parser)]
#[command(name = "nlskdv", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coupling threshold Λ(λ1, λ2) and the second-variation test at (0, V2).
    Threshold(Common),
    /// Ground state by multistart Nehari descent and Newton polishing.
    Ground(Common),
    /// Continuation in β from the decoupled solution.
    Continue(Common),
    /// Time evolution of a stationary profile as a traveling wave.
    Evolve(Common),
    /// Energies and residual of a given state.
    Energy(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    lambda1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Half width of the domain [-L, L].
    #[arg(long = "L", allow_negative_numbers = true)]
    half_width: Option<f64>,
    /// Number of grid nodes (odd).
    #[arg(long)]
    n: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, common) = match cli.command {
        Cmd::Threshold(c) => (Command::Threshold, c),
        Cmd::Ground(c) => (Command::Ground, c),
        Cmd::Continue(c) => (Command::Continue, c),
        Cmd::Evolve(c) => (Command::Evolve, c),
        Cmd::Energy(c) => (Command::Energy, c),
    };

    let file = match &common.config {
        Some(path) => load(path),
        None => Ok(RunConfig::default()),
    };
    let overrides = Overrides {
        lambda1: common.lambda1,
        lambda2: common.lambda2,
        beta: common.beta,
        half_width: common.half_width,
        n: common.n,
        out: common.out,
        seed: common.seed,
    };
    let resolved = match file.and_then(|cfg| resolve(cfg, command, &overrides)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    match dispatch(&resolved) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
