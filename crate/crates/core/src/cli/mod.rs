//! Command-line front end: `ingest`, `adf`, `estimate`, `roll`, `simulate`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{read_ingested, Manifest, Outcome};
pub use config::RunConfig;

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "apt-roll", version, about = "Rolling two-pass factor model estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat `key = value` run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override any config key, e.g. `--set factor.UI.window_k=20`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,

    #[arg(long, global = true)]
    pub window: Option<usize>,

    #[arg(long, global = true)]
    pub step: Option<usize>,

    /// Worker threads for rolling and Monte Carlo runs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Previously ingested panel (directory or manifest).
    #[arg(long, global = true)]
    pub panel: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Load inputs, build factors, align, and write the panel with a manifest.
    Ingest,
    /// Augmented Dickey-Fuller screening of every panel column.
    Adf,
    /// Full-sample GRS test and risk-premium estimates.
    Estimate,
    /// Rolling-window GRS and risk-premium sweep.
    Roll,
    /// Synthetic panel and optional Monte Carlo experiment.
    Simulate,
}

impl Cli {
    /// `--set` pairs followed by the dedicated flags, which win.
    pub fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = self
            .set
            .iter()
            .map(|s| config::parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        let flags = [
            ("window", self.window.map(|v| v.to_string())),
            ("step", self.step.map(|v| v.to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("panel", self.panel.as_ref().map(|p| p.display().to_string())),
        ];
        out.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        Ok(out)
    }
}

/// Resolves the configuration and runs one command.
pub fn run(cli: &Cli, env: &[(String, String)]) -> Result<Outcome> {
    let overrides = cli.overrides()?;
    let cfg = RunConfig::load(cli.config.as_deref(), env, &overrides)?;
    run_command(cli.command, &cfg)
}

pub fn run_command(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Ingest => commands::ingest(cfg),
        Command::Adf => commands::adf(cfg),
        Command::Estimate => commands::estimate(cfg),
        Command::Roll => commands::rolling(cfg),
        Command::Simulate => commands::simulate_cmd(cfg),
    }
}
