//! Batch front end for the `stm-core` solvers.
//!
//! Exit codes: 0 on success, 1 for usage, validation and I/O errors, 2 when
//! a solver reports a numerical-quality failure.

pub mod args;
pub mod commands;
pub mod emit;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use crate::args::{merge_config, Cli};
use crate::commands::{dispatch, Units};
use crate::emit::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Core(#[from] stm_core::Error),
    #[error("selftest failed: {failed}", failed = .1)]
    SelftestFailed(Box<Report>, String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::SelftestFailed(..) => 2,
            _ => 1,
        }
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    // try_init: a second run in the same process keeps the first logger
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if !(cli.unit_scale > 0.0 && cli.unit_scale.is_finite()) {
        return Err(CliError::Usage(format!(
            "--unit-scale must be positive, got {}",
            cli.unit_scale
        )));
    }
    let started = Instant::now();
    let run = || dispatch(&cli.command, Units(cli.unit_scale));
    let outcome = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(run),
        None => run(),
    };
    let (report, failure) = match outcome {
        Ok(r) => (r, None),
        Err(CliError::SelftestFailed(r, why)) => {
            ((*r).clone(), Some(CliError::SelftestFailed(r, why)))
        }
        Err(e) => return Err(e),
    };
    let bytes = emit::render(&report, cli.format, started.elapsed().as_secs_f64())?;
    emit::write(&bytes, cli.output.as_deref())?;
    failure.map_or(Ok(()), Err)
}

/// Parses `argv` (including the program name), runs and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let parsed = merge_config(argv).and_then(|a| {
        Cli::try_parse_from(a).map_err(|e| match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                let _ = e.print();
                CliError::Usage(String::new())
            }
            _ => CliError::Usage(e.render().to_string()),
        })
    });
    let cli = match parsed {
        Ok(cli) => cli,
        Err(CliError::Usage(msg)) if msg.is_empty() => return 0,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    init_logging(cli.verbose);
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
