use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nodeflow_cli::{list_suites, resolve_threads, run_file, RunError};

#[derive(Parser)]
#[command(name = "nodeflow", version, about = "Run nodeflow verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite described by a JSON config.
    Run {
        config: PathBuf,
        /// Directory the output prefix is resolved against.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads (falls back to NODEFLOW_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the suite names.
    List {
        #[arg(long)]
        json: bool,
    },
}

/// Exit status when a suite ran but a check failed.
const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for an invalid config or invalid arguments.
const EXIT_INVALID: u8 = 2;
/// Exit status for a library or I/O error.
const EXIT_ERROR: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { json } => {
            println!("{}", list_suites(json));
            ExitCode::SUCCESS
        }
        Command::Run { config, out_dir, threads } => {
            let result = resolve_threads(threads).and_then(|t| run_file(&config, out_dir.as_deref(), t));
            match result {
                Ok(outcome) => {
                    for check in outcome.output.checks.iter().filter(|c| !c.passed) {
                        eprintln!("FAILED {} [{}]: {:e} vs {:e}", check.name, check.case, check.value, check.threshold);
                    }
                    let passed = outcome.passed();
                    println!(
                        "{}: {} checks, {} failed; wrote {}",
                        if passed { "ok" } else { "FAILED" },
                        outcome.output.checks.len(),
                        outcome.output.checks.iter().filter(|c| !c.passed).count(),
                        outcome.csv_path.display()
                    );
                    if passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_CHECK_FAILED)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    match e {
                        RunError::Config(_) | RunError::Threads(_) => ExitCode::from(EXIT_INVALID),
                        _ => ExitCode::from(EXIT_ERROR),
                    }
                }
            }
        }
    }
}
