use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use lrinv::{output_dir, resolve, run_scenario, verify_all, write_outputs, CliError, Overrides};

/// Exact solutions of the time-dependent 2D oscillator and Landau problem,
/// verified numerically.
#[derive(Parser)]
#[command(name = "lrinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a TOML scenario file and write CSV reports.
    Run {
        /// Scenario name (see `list`) or path to a TOML file.
        target: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run every applicable check for a scenario.
    Verify {
        target: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// List built-in scenarios.
    List,
}

#[derive(Args)]
struct Flags {
    /// Output directory (default: lrinv-out/<scenario>).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Integration tolerance for the auxiliary equation.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Grid points per axis.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Invariant scale kappa.
    #[arg(long, value_name = "X")]
    kappa: Option<f64>,
    /// Matrix truncation n_max.
    #[arg(long, value_name = "N")]
    nmax: Option<u32>,
}

impl From<Flags> for Overrides {
    fn from(f: Flags) -> Self {
        Overrides { tolerance: f.tol, points: f.grid, kappa: f.kappa, n_max: f.nmax, output: f.out }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn execute(target: &str, flags: Flags, all: bool) -> Result<bool, CliError> {
    let config = resolve(target, &flags.into())?;
    let (ctx, report) = if all { verify_all(&config)? } else { run_scenario(&config)? };
    let dir = output_dir(&config);
    write_outputs(&dir, &ctx, &report)?;
    emit(&format!("{}outputs written to {}\n", report.summary(), dir.display()));
    Ok(report.passed)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        None => {
            let _ = Cli::command().print_help();
            return ExitCode::SUCCESS;
        }
        Some(Command::List) => {
            emit(&lrinv::scenarios::list());
            return ExitCode::SUCCESS;
        }
        Some(Command::Run { target, flags }) => execute(&target, flags, false),
        Some(Command::Verify { target, flags }) => execute(&target, flags, true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
