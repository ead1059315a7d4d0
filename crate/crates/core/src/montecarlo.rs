//! Monte Carlo simulation of the barycentre of randomly displayed stimuli
//! and its distance to the photodiode reference.
//!
//! Every trial draws from its own ChaCha8 stream (`stream = trial index`)
//! keyed by the configured seed, so results do not depend on how trials are
//! scheduled across threads.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::display::{
    ms_per_step, point_offset, scan_coordinate, GridPoint, ScreenModel, StimulusMatrix,
};
use crate::error::{Error, Result};
use crate::stats::mean_sd;

/// Name of the generator recorded alongside simulation output.
pub const RNG_ALGORITHM: &str = "chacha8-stream-per-trial";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    /// Each presentation picks any cell uniformly (repeated flashes).
    #[default]
    WithReplacement,
    /// Presentations are distinct cells.
    WithoutReplacement,
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::WithReplacement => "with_replacement",
            Sampler::WithoutReplacement => "without_replacement",
        }
    }
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "with_replacement" => Ok(Self::WithReplacement),
            "without_replacement" => Ok(Self::WithoutReplacement),
            other => Err(Error::Parameter(format!(
                "unknown sampler '{other}' (expected with_replacement or without_replacement)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub matrix: StimulusMatrix,
    pub screen: ScreenModel,
    pub n_stimuli: usize,
    pub n_trials: usize,
    /// Grid position under the photodiode; fractional positions are allowed.
    pub photodiode: GridPoint,
    pub sampler: Sampler,
    pub seed: u64,
    pub keep_per_trial: bool,
}

impl McConfig {
    pub fn new(matrix: StimulusMatrix, screen: ScreenModel, photodiode: GridPoint) -> Self {
        Self {
            matrix,
            screen,
            n_stimuli: 12,
            n_trials: 10_000,
            photodiode,
            sampler: Sampler::WithReplacement,
            seed: 0,
            keep_per_trial: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_stimuli == 0 {
            return Err(Error::Config("n_stimuli must be at least 1".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.sampler == Sampler::WithoutReplacement && self.n_stimuli > self.matrix.len() {
            return Err(Error::Config(format!(
                "cannot draw {} distinct stimuli from a {}x{} matrix",
                self.n_stimuli,
                self.matrix.rows(),
                self.matrix.cols()
            )));
        }
        self.matrix
            .check_fits(&self.screen)
            .map_err(|e| Error::Config(e.to_string()))?;
        // rejects photodiodes outside the grid
        point_offset(&self.matrix, &self.screen, self.photodiode, self.photodiode)
            .map_err(|e| Error::Config(format!("photodiode position: {e}")))?;
        Ok(())
    }
}

/// Distance statistics for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub n_stimuli: usize,
    pub n_trials: usize,
    /// `|ī - i_photo|` statistics in stimulus units.
    pub mean_row_dist: f64,
    pub sd_row_dist: f64,
    pub mean_col_dist: f64,
    pub sd_col_dist: f64,
    /// Absolute latency offset along the scan axis.
    pub mean_latency_ms: f64,
    pub sd_latency_ms: f64,
    /// The same statistics without taking absolute values.
    pub signed: SignedStats,
    pub per_trial: Option<Vec<GridPoint>>,
}

/// Statistics of `ī - i_photo` (and columns, latency) keeping the sign.
/// The standard deviation of the signed row difference is the standard
/// deviation of the barycentre row coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedStats {
    pub mean_row: f64,
    pub sd_row: f64,
    pub mean_col: f64,
    pub sd_col: f64,
    pub mean_latency_ms: f64,
    pub sd_latency_ms: f64,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn simulate_trial(config: &McConfig, trial: usize) -> GridPoint {
    let mut rng = trial_rng(config.seed, trial);
    let matrix = &config.matrix;
    let cells = matrix.len();
    let (mut si, mut sj) = (0u64, 0u64);
    let mut add = |k: usize| {
        let c = matrix.cell(k);
        si += c.i as u64;
        sj += c.j as u64;
    };
    match config.sampler {
        Sampler::WithReplacement => {
            for _ in 0..config.n_stimuli {
                add(rng.random_range(0..cells));
            }
        }
        Sampler::WithoutReplacement => {
            for k in index::sample(&mut rng, cells, config.n_stimuli) {
                add(k);
            }
        }
    }
    let n = config.n_stimuli as f64;
    GridPoint {
        i: si as f64 / n,
        j: sj as f64 / n,
    }
}

/// Runs the simulation on all available threads.
pub fn run_mc(config: &McConfig) -> Result<McResult> {
    run_mc_with(config, Execution::Parallel)
}

pub fn run_mc_with(config: &McConfig, execution: Execution) -> Result<McResult> {
    config.validate()?;
    let barycentres: Vec<GridPoint> = match execution {
        Execution::Serial => (0..config.n_trials)
            .map(|t| simulate_trial(config, t))
            .collect(),
        Execution::Parallel => (0..config.n_trials)
            .into_par_iter()
            .map(|t| simulate_trial(config, t))
            .collect(),
    };
    summarize(config, barycentres)
}

fn summarize(config: &McConfig, barycentres: Vec<GridPoint>) -> Result<McResult> {
    let photo = config.photodiode;
    let factor = ms_per_step(&config.matrix, &config.screen);
    let scan_photo = scan_coordinate(&config.screen, photo);

    let row: Vec<f64> = barycentres.iter().map(|b| b.i - photo.i).collect();
    let col: Vec<f64> = barycentres.iter().map(|b| b.j - photo.j).collect();
    let signed_ms: Vec<f64> = barycentres
        .iter()
        .map(|b| factor * (scan_coordinate(&config.screen, *b) - scan_photo))
        .collect();
    let abs_ms = barycentres
        .iter()
        .map(|b| point_offset(&config.matrix, &config.screen, *b, photo))
        .collect::<Result<Vec<f64>>>()?;

    let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
    let (mean_row_dist, sd_row_dist) = mean_sd(&abs(&row));
    let (mean_col_dist, sd_col_dist) = mean_sd(&abs(&col));
    let (mean_latency_ms, sd_latency_ms) = mean_sd(&abs_ms);
    let (mean_row, sd_row) = mean_sd(&row);
    let (mean_col, sd_col) = mean_sd(&col);
    let (signed_mean_ms, signed_sd_ms) = mean_sd(&signed_ms);

    Ok(McResult {
        n_stimuli: config.n_stimuli,
        n_trials: config.n_trials,
        mean_row_dist,
        sd_row_dist,
        mean_col_dist,
        sd_col_dist,
        mean_latency_ms,
        sd_latency_ms,
        signed: SignedStats {
            mean_row,
            sd_row,
            mean_col,
            sd_col,
            mean_latency_ms: signed_mean_ms,
            sd_latency_ms: signed_sd_ms,
        },
        per_trial: config.keep_per_trial.then_some(barycentres),
    })
}

/// One point of the distance-versus-stimulus-count curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    /// Mean absolute distance along the scan axis, stimulus units.
    pub mean_dist: f64,
    pub sd_dist: f64,
    pub result: McResult,
}

pub fn dist_curve(config: &McConfig, n_values: &[usize]) -> Result<Vec<CurvePoint>> {
    dist_curve_with(config, n_values, Execution::Parallel)
}

pub fn dist_curve_with(
    config: &McConfig,
    n_values: &[usize],
    execution: Execution,
) -> Result<Vec<CurvePoint>> {
    n_values
        .iter()
        .map(|&n| {
            let cfg = McConfig {
                n_stimuli: n,
                ..config.clone()
            };
            let result = run_mc_with(&cfg, execution)?;
            let (mean_dist, sd_dist) = match config.screen.orientation() {
                crate::display::Orientation::Normal => (result.mean_row_dist, result.sd_row_dist),
                crate::display::Orientation::Turned90 => (result.mean_col_dist, result.sd_col_dist),
            };
            Ok(CurvePoint {
                n,
                mean_dist,
                sd_dist,
                result,
            })
        })
        .collect()
}
