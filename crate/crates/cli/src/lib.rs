//! Command-line experiment runner for `triq`.
//!
//! ```text
//! triq [--config FILE] [--out DIR] [--seed N] <decay|protect|calibrate|tomo|schedule-dump>
//! ```
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 when the
//! numerics fail.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "triq", version, about = "Three-qubit decoherence and decoupling experiments")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Decay of the prepared state, with the closed-form overlay.
    Decay,
    /// Paired protected/unprotected runs under a decoupling sequence.
    Protect,
    /// Fit the OU noise strength to the configured T2.
    Calibrate,
    /// Simulated seven-setting readout and maximum-likelihood reconstruction.
    Tomo,
    /// Write one cycle of the configured sequence as a table.
    ScheduleDump,
}

impl Cli {
    pub fn load_config(&self, env: impl IntoIterator<Item = (String, String)>) -> CliResult<ExperimentConfig> {
        let mut overrides = Vec::new();
        if let Some(out) = &self.out {
            overrides.push(("--out", "output.dir", out.display().to_string()));
        }
        if let Some(seed) = self.seed {
            overrides.push(("--seed", "seed", seed.to_string()));
        }
        ExperimentConfig::load(self.config.as_deref(), env, &overrides)
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> CliResult<commands::Summary> {
    match command {
        Command::Decay => commands::cmd_decay(cfg),
        Command::Protect => commands::cmd_protect(cfg),
        Command::Calibrate => commands::cmd_calibrate(cfg),
        Command::Tomo => commands::cmd_tomo(cfg),
        Command::ScheduleDump => commands::cmd_schedule_dump(cfg),
    }
}

/// Whole program: parses `args`, runs, reports, and returns the exit code.
pub fn main_with<I, T>(args: I, env: impl IntoIterator<Item = (String, String)>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = cli.load_config(env).and_then(|cfg| run(cli.command, &cfg));
    match result {
        Ok(summary) => {
            let mut out = std::io::stdout().lock();
            for (k, v) in summary {
                let _ = writeln!(out, "{k}={v}");
            }
            0
        }
        Err(e) => {
            eprintln!("triq: {e}");
            e.exit_code()
        }
    }
}
