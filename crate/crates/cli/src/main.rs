use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gapsol_cli::{commands, parse_config, CliError};

#[derive(Parser)]
#[command(name = "gapsol", version, about = "Gap solitons of periodic nonlinear Schrödinger equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bloch band structure of -Δ + V.
    Band {
        #[arg(long)]
        config: PathBuf,
    },
    /// Gap membership of 0 across a frequency range of a photonic medium.
    Gapmap {
        #[arg(long)]
        config: PathBuf,
    },
    /// Ground state on one periodic cell.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Ground states on a sequence of growing cells.
    Ksweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solutions approaching a gap edge in frequency.
    Bifurcate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Checks a dumped field against the equation.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Band { config } => commands::band(&parse_config(&config)?),
        Command::Gapmap { config } => commands::gapmap(&parse_config(&config)?),
        Command::Solve { config, seed } => commands::solve(&parse_config(&config)?, seed),
        Command::Ksweep { config } => commands::ksweep(&parse_config(&config)?),
        Command::Bifurcate { config } => commands::bifurcate(&parse_config(&config)?),
        Command::Verify { config, field } => commands::verify(&parse_config(&config)?, &field),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            if code == 2 {
                eprintln!("refused: {e}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(code)
        }
    }
}
