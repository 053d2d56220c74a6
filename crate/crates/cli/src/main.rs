use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use axon_cli::{cmd_check, cmd_solve};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "axon", version, about = "Shape-aware type checker for Axon programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer signatures for every top-level binding.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Emit a machine-readable report.
        #[arg(long)]
        json: bool,
        /// Print each solver rule firing to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Solve a constraint file and print the substitution.
    Solve {
        file: PathBuf,
        #[arg(long)]
        trace: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Check { files, json, trace } => cmd_check(&files, json, trace),
        Command::Solve { file, trace } => cmd_solve(&file, trace),
    };
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    ExitCode::from(out.code as u8)
}
