//! Command-line front end for `sobolev-gauge`.
//!
//! [`run`] parses arguments, runs one subcommand and writes its report.
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;
use thiserror::Error;

pub use args::Cli;
pub use output::{Format, Report, TOOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Caps the worker threads of a run.
pub const THREADS_ENV: &str = "SOBOLEV_GAUGE_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sobolev_gauge::Error),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("csv output: {0}")]
    Csv(#[source] csv::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{THREADS_ENV}: {0}")]
    Threads(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        }
    }
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Threads(e.to_string())),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Threads(format!("expected a positive integer, got '{s}'"))),
        },
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(cap: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match cap {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Threads(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_cap: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}

fn write_file(path: &Path, report: &Report, format: Format) -> Result<(), CliError> {
    let io = |e| CliError::Io(path.display().to_string(), e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    report.write(format, &mut f)?;
    f.flush().map_err(io)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<Option<String>, CliError> {
    let cap = thread_cap()?;
    let outcome = with_threads(cap, || commands::dispatch(&cli.command))??;
    let dest = commands::output_args(&cli.command);
    let format = dest.format.unwrap_or(outcome.default_format);
    if let Some(dir) = &dest.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
        let name = outcome.report.command;
        write_file(&dir.join(format!("{name}.csv")), &outcome.report, Format::Csv)?;
        write_file(&dir.join(format!("{name}.json")), &outcome.report, Format::Json)?;
    } else if let Some(path) = &dest.output {
        write_file(path, &outcome.report, format)?;
    } else {
        outcome.report.write(format, out)?;
    }
    Ok(outcome.failure)
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(None) => EXIT_OK,
        Ok(Some(failure)) => {
            let _ = writeln!(err, "error: {failure}");
            EXIT_NUMERICAL
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
