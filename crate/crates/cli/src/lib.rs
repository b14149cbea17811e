//! Batch front end: reads a JSON experiment config, runs one pipeline and
//! writes a JSON report plus plot-ready CSV.

pub mod config;
pub mod pipelines;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{ExperimentConfig, Pipeline};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] concentrix::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "spec",
            CliError::Io(_) => "io",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}})
    }
}

#[derive(Debug, Parser)]
#[command(name = "concentrix", version, about = "Concentration certificates for (switched) linear systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive certificates for a system.
    Certify(RunArgs),
    /// Run a Monte Carlo verification pipeline.
    Verify(RunArgs),
    /// Tabulate bounds over a parameter grid.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment config, or a previous report to rerun
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "CONCENTRIX_WORKERS")]
    pub workers: Option<usize>,
    /// Directory for `<pipeline>.json` and `<pipeline>.csv`; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Certify(a) => ("certify", a),
            Command::Verify(a) => ("verify", a),
            Command::Sweep(a) => ("sweep", a),
        }
    }
}

/// Runs a command, returning the exit code and what to print on stdout.
pub fn run(command: &Command) -> (i32, String) {
    match execute(command) {
        Ok((pass, stdout)) => (if pass { EXIT_PASS } else { EXIT_FAIL }, stdout),
        Err(e) => (EXIT_CONFIG, e.to_json().to_string()),
    }
}

fn execute(command: &Command) -> Result<(bool, String), CliError> {
    let (name, args) = command.parts();
    let cfg = ExperimentConfig::load(&args.config, args.seed)?;
    let allowed: &[Pipeline] = match name {
        "certify" => &[Pipeline::Certify],
        "verify" => &[Pipeline::VerifyDeviation, Pipeline::VerifyLyapunov, Pipeline::Contraction],
        _ => &[Pipeline::Sweep],
    };
    if !allowed.contains(&cfg.pipeline) {
        return Err(CliError::Config(format!(
            "pipeline {} cannot run under `{name}`",
            cfg.pipeline.name()
        )));
    }
    let outcome = concentrix::montecarlo::with_workers(args.workers.unwrap_or(0), || match cfg.pipeline {
        Pipeline::Certify => pipelines::certify(&cfg),
        Pipeline::VerifyDeviation => pipelines::verify_deviation(&cfg),
        Pipeline::VerifyLyapunov => pipelines::verify_lyapunov(&cfg),
        Pipeline::Contraction => pipelines::contraction(&cfg),
        Pipeline::Sweep => pipelines::sweep(&cfg),
    })??;
    let report = json!({
        "tool": "concentrix",
        "code_version": concentrix::CODE_VERSION,
        "command": name,
        "pipeline": cfg.pipeline.name(),
        "config_hash": cfg.hash,
        "config": cfg.canonical,
        "pass": outcome.pass,
        "result": outcome.result,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let stdout = match &args.out {
        None => text,
        Some(dir) => {
            let files = write_outputs(dir, cfg.pipeline.name(), &text, &outcome.csv)?;
            json!({"pass": outcome.pass, "config_hash": cfg.hash, "files": files}).to_string()
        }
    };
    Ok((outcome.pass, stdout))
}

fn write_outputs(dir: &Path, stem: &str, json: &str, csv: &str) -> Result<Vec<String>, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut files = Vec::new();
    let path = dir.join(format!("{stem}.json"));
    std::fs::write(&path, json).map_err(io)?;
    files.push(path.display().to_string());
    if !csv.is_empty() {
        let path = dir.join(format!("{stem}.csv"));
        std::fs::write(&path, csv).map_err(io)?;
        files.push(path.display().to_string());
    }
    Ok(files)
}
