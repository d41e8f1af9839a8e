//! `swarmsim` command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O or other runtime failure |
//! | 2 | bad command-line usage |
//! | 3 | invalid configuration |
//! | 4 | simulation aborted (non-finite state) |
//! | 5 | record schema version mismatch |
//!
//! On failure the last line on stderr is a JSON object
//! `{"error": <kind>, "message": ..., "violations": [...]}`.

pub mod bench;
pub mod compare;
pub mod export;
pub mod overrides;
pub mod run;

use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use swarmsim::record::RecordError;
use swarmsim::{ConfigError, EngineError, ValidationReport, Violation};
use swarmsim_live::{LiveError, LiveOptions, SessionOptions};

pub use overrides::Overrides;

/// Environment variable naming the parent directory for run records when
/// neither `--out` nor `sim.out` is given.
pub const OUT_DIR_ENV: &str = "SWARMSIM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "swarmsim", version, about = "Deterministic headless drone-swarm simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its record.
    Run(run::RunArgs),
    /// Run both algorithms on the same seed and map and merge their series.
    Compare(compare::CompareArgs),
    /// Measure the real-time factor over swarm sizes, dynamics and algorithms.
    Bench(bench::BenchArgs),
    /// Turn a run record into per-panel plot data.
    Export(export::ExportArgs),
    /// Serve a live session over WebSocket with the browser viewer.
    Serve(ServeArgs),
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Directory with a built UI bundle; the built-in viewer otherwise.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Broadcast rate (frames per second).
    #[arg(long, default_value_t = 30.0)]
    pub frame_rate: f64,
    /// Simulation pace (ticks per second); defaults to real time.
    #[arg(long)]
    pub tick_rate: Option<f64>,
    /// Start paused.
    #[arg(long)]
    pub paused: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{0}")]
    Invalid(ValidationReport),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(ConfigError),
    #[error("run aborted at tick {tick}: {reason}")]
    Aborted { tick: u64, reason: String },
    #[error(transparent)]
    Engine(EngineError),
    #[error(transparent)]
    Record(RecordError),
    #[error(transparent)]
    Live(LiveError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{0}")]
    Other(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(r) => CliError::Invalid(r),
            other => CliError::Config(other),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(r) => CliError::Invalid(r),
            other => CliError::Engine(other),
        }
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        CliError::Record(e)
    }
}

impl From<LiveError> for CliError {
    fn from(e: LiveError) -> Self {
        match e {
            LiveError::Engine(e) => e.into(),
            other => CliError::Live(other),
        }
    }
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    violations: &'a [Violation],
}

impl CliError {
    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invalid(_) | CliError::Config(_) => 3,
            CliError::Aborted { .. } => 4,
            CliError::Record(RecordError::SchemaVersion { .. }) => 5,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Invalid(_) => "invalid_config",
            CliError::Config(_) => "config",
            CliError::Aborted { .. } => "aborted",
            CliError::Engine(_) => "engine",
            CliError::Record(RecordError::SchemaVersion { .. }) => "schema_version",
            CliError::Record(_) => "record",
            CliError::Live(_) => "live",
            CliError::Io { .. } => "io",
            CliError::Other(_) => "other",
        }
    }

    /// One-line JSON description for scripts.
    pub fn to_json(&self) -> String {
        let violations = match self {
            CliError::Invalid(r) => &r.violations[..],
            _ => &[],
        };
        serde_json::to_string(&ErrorLine {
            error: self.kind(),
            message: self.to_string(),
            violations,
        })
        .expect("error line serializes")
    }
}

/// Runs a parsed command, writing human output to `out`.
pub fn execute(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run::cmd_run(&args, out).map(|_| ()),
        Command::Compare(args) => compare::cmd_compare(&args, out).map(|_| ()),
        Command::Bench(args) => bench::cmd_bench(&args, out).map(|_| ()),
        Command::Export(args) => export::cmd_export(&args, out).map(|_| ()),
        Command::Serve(args) => cmd_serve(&args),
    }
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let (scenario, _) = args.overrides.scenario()?;
    let opts = LiveOptions {
        session: SessionOptions {
            frame_rate: args.frame_rate,
            ticks_per_second: args.tick_rate,
            start_paused: args.paused,
        },
        ui_dir: args.ui_dir.clone(),
    };
    let rt = tokio::runtime::Runtime::new().map_err(CliError::io("tokio runtime"))?;
    let addr = SocketAddr::new(args.host, args.port);
    eprintln!("serving on http://{addr}");
    rt.block_on(swarmsim_live::serve(scenario, addr, opts))?;
    Ok(())
}
