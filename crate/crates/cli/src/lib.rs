//! Configuration-driven runs of the guiding-center toolkit.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use commands::{Command, Context, Failure};
pub use config::{ConfigError, RunConfig};
pub use output::Artifacts;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gyrocanon", version, about = "Canonical guiding-center experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "gyrocanon.toml")]
    pub config: PathBuf,
    /// Directory receiving trajectory.csv, diagnostics.csv and summary.json.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for ε-scans; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Only report warnings and errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

fn summary_skeleton(command: Command, config: &RunConfig) -> Artifacts {
    let mut out = Artifacts::default();
    out.summary.scenario = output::ScenarioInfo {
        command: command.name().into(),
        field_model: config.field.model().name().into(),
        initial_state: match config.initial_state {
            config::InitialState::Full { .. } => "full".into(),
            config::InitialState::Gc { .. } => "gc".into(),
        },
        seed: config.seed,
    };
    out.summary.eps = config.eps;
    out
}

/// Runs one subcommand and writes its artifacts; returns the exit status.
pub fn execute(command: Command, config_path: &Path, out_dir: &Path, jobs: usize) -> i32 {
    let config = match RunConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            log::error!("{e}");
            return EXIT_CONFIG;
        }
    };
    if command == Command::Scan && config.scan.is_none() {
        log::error!("invalid `scan`: the scan subcommand needs a [scan] section");
        return EXIT_CONFIG;
    }
    let mut out = summary_skeleton(command, &config);
    let status = match Context::new(&config, jobs) {
        Err(e) => {
            log::error!("{e}");
            out.summary.error = Some(e.to_string());
            EXIT_CONFIG
        }
        Ok(ctx) => match commands::run(command, &ctx, &mut out) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                log::error!("{} failed: {e}", command.name());
                out.summary.error = Some(e.to_string());
                EXIT_NUMERICAL
            }
        },
    };
    out.summary.exit_status = status;
    if let Err(e) = out.write(out_dir) {
        log::error!("cannot write to {}: {e}", out_dir.display());
        return EXIT_CONFIG;
    }
    status
}
