//! Batch front end: one scenario config per invocation, data artifacts out.
//!
//! Exit codes: 0 on success, 2 when the config (or a render input) violates
//! the schema, 3 when the numerics fail. Artifacts are byte-identical across
//! repeated runs of the same config — iteration orders are fixed, floats go
//! through shortest round-trip formatting, and the dense-kernel backend is
//! pinned to sequential execution.

mod config;
mod render;
mod runner;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "latticewave", version, about = "Quantum-graph scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its artifacts.
    Run {
        /// Scenario description (JSON).
        config: PathBuf,
        /// Output directory; overrides the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap on the worker threads used for parallel sections.
        #[arg(long)]
        workers: Option<usize>,
        /// Report each artifact as it is written.
        #[arg(long)]
        verbose: bool,
    },
    /// Rasterize a field CSV to an 8-bit grayscale PGM heatmap.
    Render {
        /// Field table produced by `run` (billiard, vertex-field, or
        /// eigenvector CSV).
        field: PathBuf,
        /// Output image (PGM, binary P5).
        out: PathBuf,
    },
}

/// Failures split by exit code: schema violations (2) and numeric or
/// runtime failures (3).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    latticewave_core::set_sequential_backend();

    let result = match cli.command {
        Command::Run {
            config,
            out,
            workers,
            verbose,
        } => {
            if let Some(n) = workers.filter(|&n| n > 0) {
                // build the global pool before any parallel section runs
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            runner::run(&config, out.as_deref(), verbose)
        }
        Command::Render { field, out } => render::render(&field, &out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
