//! Argument handling, logging and exit codes shared by the `modeling` and
//! `fwi` executables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use seiswave::config::{load_config, Config};
use seiswave::store::StoreKind;
use seiswave::workflow::{default_workers, RunOptions};
use seiswave::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
pub struct Args {
    /// Parameter file (`key = value` per line).
    pub config: PathBuf,

    /// Number of shot workers [default: available parallelism].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,

    /// Forward-wavefield store used by the adjoint sweep.
    #[arg(long, default_value = "memory", value_parser = ["memory", "disk", "checkpoint"])]
    pub store: String,

    /// Pressure-free top boundary instead of an absorbing layer.
    #[arg(long)]
    pub free_surface: bool,

    /// Variable-density propagation (density file or Gardner's relation).
    #[arg(long)]
    pub density: bool,

    /// Minimum x-planes per parallel task in the spatial loop.
    #[arg(long)]
    pub chunk_hint: Option<usize>,
}

impl Args {
    /// Parses the command line; prints usage and exits with status 1 on
    /// bad arguments.
    pub fn parse_or_exit() -> Self {
        match Args::try_parse() {
            Ok(a) => a,
            Err(e) => {
                let code = if e.use_stderr() { i32::from(EXIT_USAGE) } else { 0 };
                let _ = e.print();
                std::process::exit(code);
            }
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            workers: self.workers.map_or_else(default_workers, |w| w as usize),
            store: self.store.parse::<StoreKind>().expect("validated by clap"),
            free_surface: self.free_surface,
            variable_density: self.density,
            chunk_hint: self.chunk_hint,
            scratch_dir: None,
        }
    }
}

/// Progress messages go to standard error; `RUST_LOG` overrides the level.
pub fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .format_timestamp_millis()
        .init();
}

pub fn load(path: &std::path::Path) -> Result<Config, Error> {
    let parsed = load_config(path)?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(parsed.config)
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Validation(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

/// Reports `err` and converts it to the process exit status.
pub fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(err))
}
