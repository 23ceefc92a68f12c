//! Command-line front end: single inferences, Bell-problem sweeps, phase
//! boundary extraction, and solver diagnostics, all emitting plain CSV.
//!
//! Every run is deterministic: identical flags and config produce
//! byte-identical output files. Exit codes: 0 success, 1 usage or input
//! error, 2 infeasible or non-converged.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

#[derive(Parser)]
#[command(name = "traceform", version, about = "Maximum-entropy inference for trace-form entropies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one inference problem from observable files and write the
    /// solution (spectrum, multipliers, entropy, residuals, curvature).
    Infer(InferArgs),
    /// Sweep the two-qubit Bell problem over a field grid.
    Bell(BellArgs),
    /// Extract the occupation-cutoff boundary and the fake-entanglement
    /// window over a deformation grid.
    Phase(PhaseArgs),
    /// Run the finite-difference identity checks at one configured point.
    Thermo(ThermoArgs),
}

/// Flags shared by every subcommand. Values omitted here fall back to the
/// config file, then to defaults.
#[derive(Args)]
struct CommonArgs {
    /// Entropy functional, e.g. "shannon", "tsallis:q=2", "exponential:q=-4".
    #[arg(long)]
    functional: Option<String>,
    /// Convergence tolerance on the worst constraint residual.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap for the dual Newton solver.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output file path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML config file; command-line flags win on conflict.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed recorded with the run; reserved for sampling extensions.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Observable matrix file (repeatable); text format, one row per line,
    /// entries "re" or "re,im".
    #[arg(long)]
    observable: Vec<PathBuf>,
    /// Target expectation value, one per observable (repeatable).
    #[arg(long)]
    target: Vec<f64>,
    /// Hilbert-space dimension; inferred from the first observable file
    /// when omitted.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args)]
struct BellArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Field grid as "lo:hi:step", endpoints inclusive.
    #[arg(long)]
    b_range: Option<String>,
    /// Weight on the negative projector of the constrained observable;
    /// 1 is the plain Bell problem.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Entropy family to sweep: "tsallis" or "exponential".
    #[arg(long)]
    family: Option<String>,
    /// Deformation grid as "lo:hi:step", endpoints inclusive.
    #[arg(long)]
    q_range: Option<String>,
}

#[derive(Args)]
struct ThermoArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Observable matrix file (repeatable), as for infer.
    #[arg(long)]
    observable: Vec<PathBuf>,
    /// Target expectation value, one per observable (repeatable).
    #[arg(long)]
    target: Vec<f64>,
    /// Hilbert-space dimension; inferred from the first observable file
    /// when omitted.
    #[arg(long)]
    dim: Option<usize>,
    /// Shortcut: run on the two-qubit Bell problem at this field value and
    /// additionally check the multiplier against the entropy slope.
    #[arg(long)]
    bell_b: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Infer(args) => commands::infer(args),
        Command::Bell(args) => commands::bell(args),
        Command::Phase(args) => commands::phase(args),
        Command::Thermo(args) => commands::thermo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
