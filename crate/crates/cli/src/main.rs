//! `natmap`: reproducible experiments over the natmap-core library.
//!
//! Exit codes: 0 success, 2 a checked property failed, 64 bad config or usage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::{error, info};
use natmap_core::Execution;
use serde::Serialize;
use serde_json::Value;

use crate::commands::Context;
use crate::config::{ExperimentConfig, Loaded, SCHEMA_VERSION};

const EXIT_FAILURE: u8 = 2;
const EXIT_CONFIG: u8 = 64;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent input; exit 64.
    Config(String),
    /// The computation itself failed; exit 2.
    Failure(String),
}

#[derive(Parser, Debug)]
#[command(name = "natmap", version, about = "Natural-map experiments on complex and quaternionic hyperbolic spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON, schema version 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report path; overrides output_path, stdout when neither is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Caps the worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Count warnings (ill-conditioned solutions, points where the map is
    /// undefined, images that are not invariant under the structure) as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Busemann closed forms against limits, finite differences and identities.
    BusemannCheck,
    /// Barycentre of a measure read from CSV.
    Barycenter,
    /// Natural map, Jacobian and determinant chain at sample points.
    Natmap,
    /// Maximum, boundary behaviour and sub-level sets of the spectral functional.
    Spectrum,
    /// Conjugated embeddings, normalized by transvections.
    RigidityDemo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::BusemannCheck => "busemann-check",
            Command::Barycenter => "barycenter",
            Command::Natmap => "natmap",
            Command::Spectrum => "spectrum",
            Command::RigidityDemo => "rigidity-demo",
        }
    }
}

#[derive(Serialize)]
struct Timings {
    total_seconds: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    tool_version: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    seed: u64,
    execution: Execution,
    passed: bool,
    results: Value,
    timings: Timings,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let mut loaded = Loaded::read(path)?;
    if let Some(seed) = cli.seed {
        loaded.config.seed = seed;
    }
    let exec = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(1) => Execution::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Failure(e.to_string()))?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let cx = Context {
        loaded: &loaded,
        seed: loaded.config.seed,
        exec,
        strict: cli.strict,
    };
    info!("{} with seed {}", cli.command.name(), cx.seed);
    let start = Instant::now();
    let (results, passed) = match cli.command {
        Command::BusemannCheck => commands::busemann_check(&cx),
        Command::Barycenter => commands::barycenter_cmd(&cx),
        Command::Natmap => commands::natmap(&cx),
        Command::Spectrum => commands::spectrum(&cx),
        Command::RigidityDemo => commands::rigidity(&cx),
    }?;
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        config: &loaded.config,
        seed: cx.seed,
        execution: exec,
        passed,
        results,
        timings: Timings {
            total_seconds: start.elapsed().as_secs_f64(),
        },
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Failure(e.to_string()))?;
    text.push('\n');
    match cli.out.as_ref().or(loaded.config.output_path.as_ref()) {
        Some(out) => std::fs::write(out, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", out.display())))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Failure(e.to_string()))?,
    }
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NATMAP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            error!("{}: a checked property failed", cli.command.name());
            ExitCode::from(EXIT_FAILURE)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("natmap: config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("natmap: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
