use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use seaqt_cli::{run_file, validate_file, CliError, Format, RunArgs};

/// Steepest-entropy-ascent quantum thermodynamics runner.
///
/// Exit codes: 0 success, 1 configuration error, 2 invariant or numerical
/// breach.
#[derive(Parser)]
#[command(name = "seaqt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structurally and physically validate a scenario file.
    Validate { file: PathBuf },
    /// Run a scenario and write its artifacts.
    Run {
        file: PathBuf,
        /// Output directory (overrides the scenario's own setting).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Trajectory format (overrides the scenario's own setting).
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Fan out variants of one numeric field: key=v1,v2,...
        /// (for example dynamics.tau=0.5,1.0,2.0).
        #[arg(long)]
        sweep: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are successful exits; anything else is a
            // configuration error
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::Validate { file } => match validate_file(&file) {
            Ok(violations) if violations.is_empty() => {
                println!("valid");
                ExitCode::SUCCESS
            }
            Ok(violations) => {
                eprintln!("invalid scenario ({} violation(s)):", violations.len());
                for v in &violations {
                    eprintln!("  - {v}");
                }
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(1)
            }
        },
        Command::Run {
            file,
            output_dir,
            format,
            sweep,
        } => {
            let args = RunArgs {
                file,
                output_dir,
                format,
                sweep,
            };
            match run_file(&args) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e @ CliError::Config(_)) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
                Err(e @ CliError::Breach(_)) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
