//! `cpdiff`: filter images on surfaces from a TOML run configuration.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical
//! failure, 3 I/O error.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cpdiff::filters::FilterError;
use cpdiff::io::IoError;

use pipeline::{Overrides, Session};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::ConstantInput(_) | FilterError::NonFiniteState { .. } => CliError::Numerical(e.to_string()),
            FilterError::InvalidConfig { .. } | FilterError::UnknownKind(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::File { .. } | IoError::Image { .. } | IoError::Format { .. } | IoError::Geometry(_) => {
                CliError::Io(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<cpdiff::BandError> for CliError {
    fn from(e: cpdiff::BandError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<cpdiff::Error> for CliError {
    fn from(e: cpdiff::Error) -> Self {
        match e {
            cpdiff::Error::Filter(e) => e.into(),
            cpdiff::Error::Io(e) => e.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "cpdiff", version, about = "Diffusion filtering of images on curved surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: band, texture, noise, filter, export, metrics.
    #[command(alias = "run")]
    Filter(FilterArgs),
    /// Build the computational band and write it as text.
    Band(CommonArgs),
    /// Map the texture (and noise) onto the surface and export it.
    Map(CommonArgs),
    /// Compare two PLY files or field dumps.
    Metrics { a: PathBuf, b: PathBuf },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (0 = all cores); overrides the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Noise seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Per-step CSV diagnostics.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Run this many nominal steps instead of the configured stop time.
    #[arg(long)]
    steps: Option<usize>,
    /// Print the schedule and exit without computing.
    #[arg(long)]
    dry_run: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, out: self.out.clone(), threads: self.threads, ..Overrides::default() }
    }
}

fn session(args: &CommonArgs, overrides: Overrides) -> Result<Session, CliError> {
    let session = Session::load(&args.config, overrides)?;
    let threads = session.threads();
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    Ok(session)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Filter(args) => {
            let overrides =
                Overrides { diagnostics: args.diagnostics.clone(), steps: args.steps, ..args.common.overrides() };
            let session = session(&args.common, overrides)?;
            if args.dry_run {
                let (n, tau) = session.schedule()?;
                println!("iterations: {n}");
                println!("tau: {tau:e}");
                return Ok(());
            }
            let report = session.run()?;
            println!("iterations: {}", report.iterations);
        }
        Command::Band(args) => {
            session(&args, args.overrides())?.band()?;
        }
        Command::Map(args) => {
            session(&args, args.overrides())?.map()?;
        }
        Command::Metrics { a, b } => {
            pipeline::metrics(&a, &b)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cpdiff: {e}");
            ExitCode::from(e.code())
        }
    }
}
