//! `gci`: scenario runner and reproduction harness.

mod analysis;
mod reproduce;
mod scenario;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::analysis::{Overrides, SweepParam};
use crate::scenario::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numeric failure in {op}: {source}")]
    Numeric {
        op: &'static str,
        #[source]
        source: gci_core::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Numeric { .. } => 3,
        }
    }
}

/// Tags a core error with the operation that raised it.
pub trait Op<T> {
    fn op(self, op: &'static str) -> Result<T, CliError>;
}

impl<T> Op<T> for gci_core::Result<T> {
    fn op(self, op: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric { op, source })
    }
}

#[derive(Parser)]
#[command(name = "gci", version, about = "Generalized Clausius inequalities: scenario runner and reproduction harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Replace the generator grid with a single parameter value.
    #[arg(long)]
    alpha: Option<f64>,
    /// Staircase steps for every isotherm.
    #[arg(long)]
    steps: Option<usize>,
    /// Seed for randomized scenarios; physics runs ignore it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Heat-resolution tolerance for the ledger analysis.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its table.
    Run(RunArgs),
    /// Run a scenario once per grid value of a parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        grid: Vec<f64>,
    },
    /// Recompute a published number and compare with its expected value.
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
    },
    /// Print the scenario JSON schema.
    Schema,
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("GCI_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Schema(format!("GCI_THREADS: expected a positive integer, found {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn emit(table: &table::Table, format: Format, output: Option<&Path>) -> Result<(), CliError> {
    let bytes = match format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json()?,
    };
    match output {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn overrides(args: &RunArgs) -> Result<Overrides, CliError> {
    if let Some(t) = args.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Schema(format!("--tolerance must be positive, got {t}")));
        }
    }
    if args.steps == Some(0) {
        return Err(CliError::Schema("--steps must be at least 1".into()));
    }
    Ok(Overrides { alpha: args.alpha, steps: args.steps, tolerance: args.tolerance, seed: args.seed })
}

fn real_main() -> Result<ExitCode, CliError> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return Ok(ExitCode::from(code));
        }
    };
    match cli.command {
        Command::Run(args) => {
            let sc = scenario::load(&args.scenario)?;
            let ov = overrides(&args)?;
            let format = args.format.or(sc.output.format).unwrap_or_default();
            let table = with_pool(|| analysis::run(&sc, &ov))??;
            emit(&table, format, args.output.as_deref())?;
        }
        Command::Sweep { run: args, param, grid } => {
            let sc = scenario::load(&args.scenario)?;
            let ov = overrides(&args)?;
            if grid.is_empty() {
                return Err(CliError::Schema("--grid: empty sweep grid".into()));
            }
            let format = args.format.or(sc.output.format).unwrap_or_default();
            let table = with_pool(|| analysis::sweep(&sc, &ov, param, &grid))??;
            for (k, msg) in table.errors() {
                eprintln!("row {k}: {msg}");
            }
            emit(&table, format, args.output.as_deref())?;
        }
        Command::Reproduce { target } => {
            let checks = reproduce::run(target);
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", checks.len());
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Schema => {
            let s = serde_json::to_string_pretty(&scenario::schema()).expect("schema serializes");
            println!("{s}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gci: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
