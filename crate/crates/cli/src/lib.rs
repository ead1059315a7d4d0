//! Command-line front end for the `taglat` tools.

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use taglat_core::montecarlo::Execution;
use taglat_core::SynthParams;
use thiserror::Error;

use crate::commands::{AnalyzeOptions, MonteCarloOptions, SynthesizeOptions};
use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("data: {0}")]
    Data(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Analysis(_) => 4,
        }
    }
}

impl From<taglat_core::Error> for CliError {
    fn from(e: taglat_core::Error) -> Self {
        match e {
            taglat_core::Error::Io(io) => CliError::Io(io),
            taglat_core::Error::Format { .. } => CliError::Data(e.to_string()),
            taglat_core::Error::EmptyInput(_) => CliError::Analysis(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "taglat",
    version,
    about = "Display latency modelling and tag/photodiode trace analysis"
)]
pub struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// RNG seed, overrides `mc.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-cell latency table for the configured screen and pipeline.
    Model,
    /// Barycentre distance statistics over random stimulus subsets.
    Montecarlo {
        /// Subset sizes, e.g. `12` or `4,12,48`.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        /// Report signed distances instead of absolute ones.
        #[arg(long)]
        signed: bool,
        /// Run trials on one thread (results are identical).
        #[arg(long)]
        serial: bool,
    },
    /// Estimate latency from a tag/photodiode trace CSV.
    Analyze {
        trace: PathBuf,
        #[arg(long, default_value_t = 1000.0)]
        fs: f64,
        /// Onset threshold as a fraction of the signal range.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Drift-removal window.
        #[arg(long, default_value_t = 500.0)]
        window_ms: f64,
        #[arg(long, default_value_t = 250.0)]
        max_latency_ms: f64,
        #[arg(long, default_value_t = 100.0)]
        min_separation_ms: f64,
        #[arg(long)]
        multipass_threshold_ms: Option<f64>,
    },
    /// Shift epochs by a latency offset.
    Correct {
        epochs: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        offset_ms: f64,
        #[arg(long, default_value_t = 1000.0)]
        fs: f64,
        /// Time of the first sample relative to the tag.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t0_ms: f64,
    },
    /// Generate a synthetic trace CSV.
    Synthesize {
        #[arg(long, default_value_t = 100)]
        events: usize,
        #[arg(long, default_value_t = 500.0)]
        start_ms: f64,
        #[arg(long, default_value_t = 1000.0)]
        spacing_ms: f64,
        #[arg(long, default_value_t = 40.0)]
        latency_mean_ms: f64,
        #[arg(long, default_value_t = 5.0)]
        latency_sd_ms: f64,
        /// Fixed latencies cycled over events, e.g. `117,143`.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        latencies: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1000.0)]
        fs: f64,
        #[arg(long, default_value_t = 0.0)]
        noise_sd: f64,
        /// Sinusoidal drift amplitude on the photodiode channel.
        #[arg(long, default_value_t = 0.0)]
        drift: f64,
        #[arg(long, default_value_t = 50.0)]
        pulse_ms: f64,
    },
    /// Check the configuration against the latency guidelines.
    Report,
}

/// Output of one invocation.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| match e {
        ConfigError::Line { line, message } => {
            CliError::Usage(format!("{}:{line}: {message}", path.display()))
        }
        other => other.into(),
    })
}

fn require_config(cli: &Cli) -> Result<RunConfig, CliError> {
    match &cli.config {
        Some(p) => load_config(p),
        None => Err(CliError::Usage("this command needs --config PATH".into())),
    }
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let mut output = Output::default();
    output.stdout = match &cli.command {
        Command::Model => commands::model(&require_config(cli)?)?,
        Command::Montecarlo {
            n,
            trials,
            signed,
            serial,
        } => {
            let opts = MonteCarloOptions {
                n_values: n.clone(),
                n_trials: *trials,
                seed: cli.seed,
                signed: *signed,
                execution: if *serial {
                    Execution::Serial
                } else {
                    Execution::Parallel
                },
            };
            commands::montecarlo(&require_config(cli)?, &opts)?
        }
        Command::Analyze {
            trace,
            fs,
            threshold,
            window_ms,
            max_latency_ms,
            min_separation_ms,
            multipass_threshold_ms,
        } => {
            let config = cli.config.as_deref().map(load_config).transpose()?;
            let opts = AnalyzeOptions {
                fs: *fs,
                threshold: *threshold,
                window_ms: *window_ms,
                max_latency_ms: *max_latency_ms,
                min_separation_ms: *min_separation_ms,
                multipass_threshold_ms: *multipass_threshold_ms,
            };
            commands::analyze(config.as_ref(), trace, &opts)?
        }
        Command::Correct {
            epochs,
            offset_ms,
            fs,
            t0_ms,
        } => {
            let res = commands::correct(epochs, *offset_ms, *fs, *t0_ms)?;
            output.stderr = format!("shift_samples: {}\n", res.shift_samples);
            res.csv
        }
        Command::Synthesize {
            events,
            start_ms,
            spacing_ms,
            latency_mean_ms,
            latency_sd_ms,
            latencies,
            fs,
            noise_sd,
            drift,
            pulse_ms,
        } => {
            let opts = SynthesizeOptions {
                events: *events,
                start_ms: *start_ms,
                spacing_ms: *spacing_ms,
                latency_mean_ms: *latency_mean_ms,
                latency_sd_ms: *latency_sd_ms,
                latencies_ms: latencies.clone(),
                params: SynthParams {
                    sample_rate_hz: *fs,
                    pulse_width_ms: *pulse_ms,
                    noise_sd: *noise_sd,
                    drift_amplitude: *drift,
                    seed: cli.seed.unwrap_or(0),
                    ..SynthParams::default()
                },
            };
            commands::synthesize(&opts)?
        }
        Command::Report => report::render(&report::build_report(&require_config(cli)?)?),
    };
    Ok(output)
}
