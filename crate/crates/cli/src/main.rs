//! `feasim`: generate episodes, run seeded rollouts and plot episode logs.

mod commands;
mod manifest;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use manifest::{Motion, PolicyKind, Seeds};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(path: &Path, message: impl ToString) -> CliError {
        CliError::Config {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Reads a UTF-8 file; failures name the path.
pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(path, e))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    use std::io::Write;
    let fail = |e: &dyn std::fmt::Display| CliError::Runtime(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

#[derive(Debug, Parser)]
#[command(
    name = "feasim",
    version,
    about = "Kinematic-feasibility simulator for mobile manipulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate one episode file per seed.
    Gen(RunArgs),
    /// Roll out a policy on one episode per seed and write logs and a summary.
    Run(RunArgs),
    /// Render an episode log as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML manifest with defaults for the flags below.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Built-in robot name (pr2, hsr, tiago) or robot TOML path.
    #[arg(long)]
    pub robot: Option<String>,
    /// World generator TOML.
    #[arg(long)]
    pub worldgen: Option<PathBuf>,
    /// Environment TOML.
    #[arg(long)]
    pub env: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub motion: Option<Motion>,
    /// Seeds as `a..b` (end excluded), `a..=b` or one number.
    #[arg(long)]
    pub seeds: Option<Seeds>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyKind>,
    /// Directory of episode files from `gen`; episodes are generated when absent.
    #[arg(long)]
    pub episodes: Option<PathBuf>,
    /// Directory of logs whose actions the replay policy repeats.
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Episode log (JSON lines).
    log: PathBuf,
    /// Output SVG; defaults to the log path with an `.svg` extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn plot(args: PlotArgs) -> Result<(), CliError> {
    let text = read(&args.log)?;
    let log =
        feasim::env::EpisodeLog::from_jsonl(&text).map_err(|e| CliError::config(&args.log, e))?;
    let out = args.out.unwrap_or_else(|| args.log.with_extension("svg"));
    write_atomic(&out, &plot::render(&log))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(args) => commands::resolve(args).and_then(|s| commands::gen(&s)),
        Command::Run(args) => commands::resolve(args).and_then(|s| commands::run(&s)),
        Command::Plot(args) => plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
