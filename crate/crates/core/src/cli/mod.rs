//! Command-line experiment runner.
//!
//! Every command reads one [`RunConfig`], writes CSV tables, JSON reports and
//! a `manifest.json` into the output directory, and prints its report to
//! standard output. Failures print a JSON error object instead; malformed
//! input exits with code 2, numerical failures with code 1.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};

pub use commands::{
    cmd_ensemble, cmd_saturate, cmd_simulate, cmd_steer, cmd_verify_limit, sample_ball,
    EnsembleArgs, LimitArgs, SaturateArgs, SimulateArgs, SteerArgs,
};
pub use config::{parse_field, Manifest, RunConfig};
pub use svg::fan_chart;

#[derive(Debug, Parser)]
#[command(
    name = "bo-control",
    version,
    about = "Forced Benjamin-Ono experiments: simulation, steering, saturation, noise"
)]
pub struct Cli {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Ensemble worker threads, overriding the config.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve forward under a schedule file or sampled noise.
    Simulate(SimulateArgs),
    /// Plan an admissible two-mode schedule from u0 to near u1.
    Steer(SteerArgs),
    /// Tabulate ladder dimensions and mode coverage.
    Saturate(SaturateArgs),
    /// Hitting-time statistics under periodic noise.
    Ensemble(EnsembleArgs),
    /// Errors of the short-time limit as the time scale shrinks.
    VerifyLimit(LimitArgs),
}

impl Cli {
    /// Config file plus command-line overrides.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn execute(&self) -> Result<serde_json::Value> {
        let cfg = self.run_config()?;
        match &self.command {
            Command::Simulate(a) => cmd_simulate(&cfg, a),
            Command::Steer(a) => cmd_steer(&cfg, a),
            Command::Saturate(a) => cmd_saturate(&cfg, a),
            Command::Ensemble(a) => cmd_ensemble(&cfg, a),
            Command::VerifyLimit(a) => cmd_verify_limit(&cfg, a),
        }
    }
}

/// 2 for bad input, 1 for failures of the computation itself.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. }
        | Error::Json(_)
        | Error::Io(_)
        | Error::InvalidConfig(_)
        | Error::InvalidGrid(_)
        | Error::InvalidModel(_)
        | Error::InvalidSobolevIndex(_)
        | Error::InvalidForcing(_)
        | Error::NotMeanZero { .. }
        | Error::GridMismatch => 2,
        _ => 1,
    }
}

/// Machine-readable error report.
pub fn error_json(err: &Error) -> serde_json::Value {
    let mut v = json!({"error": err.kind(), "message": err.to_string()});
    match err {
        Error::Parse { segment, .. } => v["segment"] = json!(segment),
        Error::NonFinite { time, .. } => v["time"] = json!(time),
        Error::BudgetExhausted { partial, .. } => {
            v["partial_segments"] = json!(partial.as_ref().map(|p| p.len()))
        }
        _ => {}
    }
    v
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match cli.execute() {
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            0
        }
        Err(err) => {
            let report = error_json(&err);
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{text}");
            if let Ok(cfg) = cli.run_config() {
                if std::fs::create_dir_all(&cfg.output_dir).is_ok() {
                    let _ = std::fs::write(cfg.output_dir.join("error.json"), text + "\n");
                }
            }
            exit_code(&err)
        }
    }
}
