//! Stimulus-locked epochs: latency offset correction, averaging, and the
//! attenuation that latency jitter imposes on an average.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_range, Error, Result};
use crate::trace::csv_error;

/// A rectangular set of equally long epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    sample_rate_hz: f64,
    epochs: Vec<Vec<f64>>,
    t0_ms: f64,
    shift_samples: i64,
}

impl EpochSet {
    pub fn new(sample_rate_hz: f64, epochs: Vec<Vec<f64>>, t0_ms: f64) -> Result<Self> {
        check_range(
            "sample_rate_hz",
            sample_rate_hz,
            sample_rate_hz > 0.0,
            "> 0",
        )?;
        let Some(first) = epochs.first() else {
            return Err(Error::EmptyInput("an epoch set needs at least one epoch"));
        };
        let n_samples = first.len();
        if n_samples == 0 {
            return Err(Error::Parameter("epochs must contain samples".into()));
        }
        if let Some(k) = epochs.iter().position(|e| e.len() != n_samples) {
            return Err(Error::Parameter(format!(
                "epoch {k} has {} samples, expected {n_samples}",
                epochs[k].len()
            )));
        }
        let duration = n_samples as f64 * 1000.0 / sample_rate_hz;
        check_range(
            "t0_ms",
            t0_ms,
            t0_ms >= 0.0 && t0_ms < duration,
            "0 <= t0_ms < epoch duration",
        )?;
        Ok(Self {
            sample_rate_hz,
            epochs,
            t0_ms,
            shift_samples: 0,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn epochs(&self) -> &[Vec<f64>] {
        &self.epochs
    }

    pub fn t0_ms(&self) -> f64 {
        self.t0_ms
    }

    pub fn n_epochs(&self) -> usize {
        self.epochs.len()
    }

    pub fn n_samples(&self) -> usize {
        self.epochs[0].len()
    }

    pub fn duration_ms(&self) -> f64 {
        self.n_samples() as f64 * 1000.0 / self.sample_rate_hz
    }

    /// Net shift applied by [`correct_offset`] so far, samples toward
    /// earlier time.
    pub fn shift_samples(&self) -> i64 {
        self.shift_samples
    }
}

/// Shifts every epoch `round(offset_ms·fs/1000)` samples toward earlier
/// time, zero-filling the vacated end. Negative offsets shift later.
pub fn correct_offset(epochs: &EpochSet, offset_ms: f64) -> Result<EpochSet> {
    check_range(
        "offset_ms",
        offset_ms,
        offset_ms.abs() < epochs.duration_ms(),
        "|offset_ms| < epoch duration",
    )?;
    let shift = (offset_ms * epochs.sample_rate_hz / 1000.0).round() as i64;
    let n = epochs.n_samples() as i64;
    let shifted = epochs
        .epochs
        .iter()
        .map(|e| {
            (0..n)
                .map(|k| {
                    let src = k + shift;
                    if (0..n).contains(&src) {
                        e[src as usize]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(EpochSet {
        epochs: shifted,
        shift_samples: epochs.shift_samples + shift,
        ..epochs.clone()
    })
}

/// Sample-wise mean across epochs.
pub fn average(epochs: &EpochSet) -> Vec<f64> {
    let n = epochs.n_epochs() as f64;
    let mut acc = vec![0.0; epochs.n_samples()];
    for e in &epochs.epochs {
        for (a, v) in acc.iter_mut().zip(e) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Peak of the average of `n_epochs` unit Gaussian pulses (SD
/// `pulse_sd_ms`) with onsets jittered by `Normal(0, jitter_sd_ms)`,
/// relative to the peak of one pulse.
pub fn jitter_attenuation(
    pulse_sd_ms: f64,
    jitter_sd_ms: f64,
    n_epochs: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<f64> {
    check_range("pulse_sd_ms", pulse_sd_ms, pulse_sd_ms > 0.0, "> 0")?;
    check_range("jitter_sd_ms", jitter_sd_ms, jitter_sd_ms >= 0.0, ">= 0")?;
    check_range(
        "sample_rate_hz",
        sample_rate_hz,
        sample_rate_hz > 0.0,
        "> 0",
    )?;
    if n_epochs == 0 {
        return Err(Error::Parameter("n_epochs must be at least 1".into()));
    }
    let spread = (pulse_sd_ms.powi(2) + jitter_sd_ms.powi(2)).sqrt();
    // +/- 6 combined SDs around the nominal onset
    let half = (6.0 * spread * sample_rate_hz / 1000.0).ceil() as i64;
    let times: Vec<f64> = (-half..=half)
        .map(|k| k as f64 * 1000.0 / sample_rate_hz)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = vec![0.0; times.len()];
    let inv = 1.0 / (2.0 * pulse_sd_ms * pulse_sd_ms);
    for _ in 0..n_epochs {
        let z: f64 = StandardNormal.sample(&mut rng);
        let onset = z * jitter_sd_ms;
        for (a, t) in acc.iter_mut().zip(&times) {
            *a += (-(t - onset).powi(2) * inv).exp();
        }
    }
    let peak = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max) / n_epochs as f64;
    // the unjittered pulse peaks at exactly 1 on the t = 0 sample
    Ok(peak)
}

pub const EPOCH_HEADER: [&str; 3] = ["epoch", "sample", "value"];

/// Writes the long-format `epoch,sample,value` CSV.
pub fn write_epochs_csv<W: Write>(mut out: W, epochs: &EpochSet) -> Result<()> {
    writeln!(out, "{}", EPOCH_HEADER.join(","))?;
    for (e, row) in epochs.epochs.iter().enumerate() {
        for (s, v) in row.iter().enumerate() {
            writeln!(out, "{e},{s},{v}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads the long-format epoch CSV. Rows must list epochs in order with
/// contiguous zero-based sample indices.
pub fn read_epochs_csv<R: Read>(input: R, sample_rate_hz: f64, t0_ms: f64) -> Result<EpochSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(EPOCH_HEADER) {
        return Err(Error::Format {
            line: 1,
            message: format!(
                "expected header 'epoch,sample,value', got '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut epochs: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Format { line, message };
        let field = |k: usize| record.get(k).unwrap_or_default();
        let epoch: usize = field(0)
            .parse()
            .map_err(|_| bad(format!("invalid epoch index '{}'", field(0))))?;
        let sample: usize = field(1)
            .parse()
            .map_err(|_| bad(format!("invalid sample index '{}'", field(1))))?;
        let value = field(2)
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("invalid value '{}'", field(2))))?;
        if epoch == epochs.len() {
            epochs.push(Vec::new());
        } else if epoch + 1 != epochs.len() {
            return Err(bad(format!("epoch {epoch} out of order")));
        }
        let current = epochs.last_mut().expect("pushed above");
        if sample != current.len() {
            return Err(bad(format!(
                "expected sample {} of epoch {epoch}, got {sample}",
                current.len()
            )));
        }
        current.push(value);
    }
    EpochSet::new(sample_rate_hz, epochs, t0_ms)
}
