//! Photodiode trace analysis.
//!
//! The measurement chain is: remove slow drift from the photodiode channel,
//! detect rising threshold crossings on both channels, pair each tag with the
//! first photodiode onset that follows it, and summarise the per-event
//! latencies. [`synthesize_trace`] produces recordings with known injected
//! latencies for closing the loop.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_range, Error, Result};
use crate::stats::{mean_sd, two_means};

/// Two synchronously sampled channels: the tag/trigger line and the
/// photodiode.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecording {
    sample_rate_hz: f64,
    tag: Vec<f64>,
    photo: Vec<f64>,
}

impl TraceRecording {
    pub fn new(sample_rate_hz: f64, tag: Vec<f64>, photo: Vec<f64>) -> Result<Self> {
        check_range(
            "sample_rate_hz",
            sample_rate_hz,
            sample_rate_hz > 0.0,
            "> 0",
        )?;
        if tag.len() != photo.len() {
            return Err(Error::Parameter(format!(
                "channel lengths differ: tag has {} samples, photo has {}",
                tag.len(),
                photo.len()
            )));
        }
        if let Some(k) = tag
            .iter()
            .zip(&photo)
            .position(|(t, p)| !t.is_finite() || !p.is_finite())
        {
            return Err(Error::Parameter(format!("non-finite sample at index {k}")));
        }
        Ok(Self {
            sample_rate_hz,
            tag,
            photo,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn tag(&self) -> &[f64] {
        &self.tag
    }

    pub fn photo(&self) -> &[f64] {
        &self.photo
    }

    pub fn len(&self) -> usize {
        self.tag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tag.is_empty()
    }

    pub fn duration_ms(&self) -> f64 {
        self.len() as f64 * 1000.0 / self.sample_rate_hz
    }
}

fn ms_to_samples(ms: f64, fs: f64) -> f64 {
    ms * fs / 1000.0
}

/// Subtracts the centred moving average over `window_ms` from `signal`.
/// Near the edges the window is truncated to the available samples.
pub fn remove_drift(signal: &[f64], sample_rate_hz: f64, window_ms: f64) -> Result<Vec<f64>> {
    check_range(
        "sample_rate_hz",
        sample_rate_hz,
        sample_rate_hz > 0.0,
        "> 0",
    )?;
    check_range("window_ms", window_ms, window_ms > 0.0, "> 0")?;
    let window = ms_to_samples(window_ms, sample_rate_hz).round().max(1.0) as usize;
    if window > signal.len() {
        return Err(Error::Parameter(format!(
            "drift window of {window} samples is longer than the {}-sample signal",
            signal.len()
        )));
    }
    let half = window / 2;
    let origin = signal[0];
    let mut prefix = Vec::with_capacity(signal.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in signal {
        acc += x - origin;
        prefix.push(acc);
    }
    let n = signal.len();
    Ok((0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(n);
            let local = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
            (signal[k] - origin) - local
        })
        .collect())
}

/// Rising threshold-crossing detector with hysteresis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetDetector {
    /// Crossing level as a fraction of the signal's dynamic range.
    pub threshold_fraction: f64,
    /// The detector re-arms once the signal falls this fraction of the range
    /// below the crossing level.
    pub hysteresis_fraction: f64,
    pub min_separation_ms: f64,
}

impl Default for OnsetDetector {
    fn default() -> Self {
        Self {
            threshold_fraction: 0.5,
            hysteresis_fraction: 0.1,
            min_separation_ms: 100.0,
        }
    }
}

impl OnsetDetector {
    pub fn detect(&self, signal: &[f64], sample_rate_hz: f64) -> Result<Vec<usize>> {
        let f = self.threshold_fraction;
        check_range("threshold_fraction", f, f > 0.0 && f < 1.0, "0 < value < 1")?;
        check_range(
            "hysteresis_fraction",
            self.hysteresis_fraction,
            self.hysteresis_fraction >= 0.0,
            ">= 0",
        )?;
        check_range(
            "min_separation_ms",
            self.min_separation_ms,
            self.min_separation_ms >= 0.0,
            ">= 0",
        )?;
        check_range(
            "sample_rate_hz",
            sample_rate_hz,
            sample_rate_hz > 0.0,
            "> 0",
        )?;

        let (min, max) = signal
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        if signal.is_empty() || max <= min {
            return Ok(Vec::new());
        }
        let range = max - min;
        let level = min + f * range;
        // keep the re-arm level strictly above the minimum
        let rearm = level - self.hysteresis_fraction.min(f / 2.0) * range;
        let separation = ms_to_samples(self.min_separation_ms, sample_rate_hz).round() as usize;

        let mut onsets: Vec<usize> = Vec::new();
        let mut armed = signal[0] < level;
        for (k, &x) in signal.iter().enumerate() {
            if armed && x >= level {
                armed = false;
                if onsets.last().is_none_or(|&last| k - last >= separation) {
                    onsets.push(k);
                }
            } else if !armed && x < rearm {
                armed = true;
            }
        }
        Ok(onsets)
    }
}

/// Rising crossings of `min + threshold_fraction·(max - min)`, keeping the
/// first crossing in each `min_separation_ms` window.
pub fn detect_onsets(
    signal: &[f64],
    threshold_fraction: f64,
    min_separation_ms: f64,
    sample_rate_hz: f64,
) -> Result<Vec<usize>> {
    OnsetDetector {
        threshold_fraction,
        min_separation_ms,
        ..OnsetDetector::default()
    }
    .detect(signal, sample_rate_hz)
}

/// Tag/photodiode onset matching. Indices are sample positions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub unpaired_tags: Vec<usize>,
    pub unpaired_photos: Vec<usize>,
}

impl Pairing {
    pub fn has_unpaired(&self) -> bool {
        !self.unpaired_tags.is_empty() || !self.unpaired_photos.is_empty()
    }
}

/// Pairs every tag onset with the earliest later photodiode onset no more
/// than `max_latency_ms` away. Both inputs must be strictly increasing.
pub fn pair_events(
    tag_onsets: &[usize],
    photo_onsets: &[usize],
    max_latency_ms: f64,
    sample_rate_hz: f64,
) -> Pairing {
    debug_assert!(tag_onsets.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(photo_onsets.windows(2).all(|w| w[0] < w[1]));
    let mut out = Pairing::default();
    let mut p = 0;
    for &t in tag_onsets {
        while p < photo_onsets.len() && photo_onsets[p] <= t {
            out.unpaired_photos.push(photo_onsets[p]);
            p += 1;
        }
        match photo_onsets.get(p) {
            Some(&ph) if (ph - t) as f64 * 1000.0 / sample_rate_hz <= max_latency_ms => {
                out.pairs.push((t, ph));
                p += 1;
            }
            _ => out.unpaired_tags.push(t),
        }
    }
    out.unpaired_photos.extend_from_slice(&photo_onsets[p..]);
    out
}

/// Per-event latencies and their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyEstimate {
    pub per_event_ms: Vec<f64>,
    pub mean_ms: f64,
    /// Sample standard deviation.
    pub sd_ms: f64,
    pub n_events: usize,
}

impl LatencyEstimate {
    pub fn from_latencies(per_event_ms: Vec<f64>) -> Result<Self> {
        if per_event_ms.is_empty() {
            return Err(Error::EmptyInput(
                "no paired events to estimate latency from",
            ));
        }
        let (mean_ms, sd_ms) = mean_sd(&per_event_ms);
        Ok(Self {
            n_events: per_event_ms.len(),
            per_event_ms,
            mean_ms,
            sd_ms,
        })
    }
}

pub fn estimate_latency(pairs: &[(usize, usize)], sample_rate_hz: f64) -> Result<LatencyEstimate> {
    check_range(
        "sample_rate_hz",
        sample_rate_hz,
        sample_rate_hz > 0.0,
        "> 0",
    )?;
    LatencyEstimate::from_latencies(
        pairs
            .iter()
            .map(|&(t, p)| (p as f64 - t as f64) * 1000.0 / sample_rate_hz)
            .collect(),
    )
}

/// Two latency clusters whose means are further apart than the multipass
/// threshold: the stimulus showed up at two places or in two frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bimodality {
    pub low_mean_ms: f64,
    pub high_mean_ms: f64,
    pub low_count: usize,
    pub high_count: usize,
}

impl Bimodality {
    pub fn separation_ms(&self) -> f64 {
        self.high_mean_ms - self.low_mean_ms
    }
}

/// Splits latencies with 1-D two-means and reports a bimodality when the
/// cluster means differ by more than `threshold_ms` and the smaller cluster
/// holds at least a tenth of the events (at least two). Isolated outliers
/// do not count.
pub fn detect_bimodality(per_event_ms: &[f64], threshold_ms: f64) -> Option<Bimodality> {
    let (low_mean_ms, high_mean_ms, low_count) = two_means(per_event_ms)?;
    let n = per_event_ms.len();
    let high_count = n - low_count;
    let min_cluster = (n.div_ceil(10)).max(2);
    (high_mean_ms - low_mean_ms > threshold_ms && low_count.min(high_count) >= min_cluster)
        .then_some(Bimodality {
            low_mean_ms,
            high_mean_ms,
            low_count,
            high_count,
        })
}

/// Parameters of the measurement chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisParams {
    pub detector: OnsetDetector,
    /// Moving-average window for photodiode drift removal.
    pub window_ms: f64,
    pub max_latency_ms: f64,
    pub multipass_threshold_ms: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            detector: OnsetDetector::default(),
            window_ms: 500.0,
            max_latency_ms: 250.0,
            multipass_threshold_ms: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceAnalysis {
    pub estimate: LatencyEstimate,
    pub pairing: Pairing,
    pub bimodality: Option<Bimodality>,
}

/// Runs drift removal, onset detection, pairing and estimation end to end.
pub fn analyze_trace(rec: &TraceRecording, params: &AnalysisParams) -> Result<TraceAnalysis> {
    let fs = rec.sample_rate_hz();
    let photo = remove_drift(rec.photo(), fs, params.window_ms)?;
    let tag_onsets = params.detector.detect(rec.tag(), fs)?;
    let photo_onsets = params.detector.detect(&photo, fs)?;
    let pairing = pair_events(&tag_onsets, &photo_onsets, params.max_latency_ms, fs);
    let estimate = estimate_latency(&pairing.pairs, fs)?;
    let bimodality = detect_bimodality(&estimate.per_event_ms, params.multipass_threshold_ms);
    Ok(TraceAnalysis {
        estimate,
        pairing,
        bimodality,
    })
}

/// Synthetic recording settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub sample_rate_hz: f64,
    pub pulse_width_ms: f64,
    /// White-noise standard deviation on the photodiode channel.
    pub noise_sd: f64,
    /// Amplitude of the slow sinusoidal photodiode drift.
    pub drift_amplitude: f64,
    pub drift_period_ms: f64,
    /// Recording time after the last photodiode pulse.
    pub tail_ms: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            sample_rate_hz: 1000.0,
            pulse_width_ms: 50.0,
            noise_sd: 0.0,
            drift_amplitude: 0.0,
            drift_period_ms: 10_000.0,
            tail_ms: 500.0,
            seed: 0,
        }
    }
}

/// Recording whose photodiode pulses trail the tag pulses by draws from
/// `Normal(latency_mean_ms, latency_sd_ms)`, clamped at zero.
pub fn synthesize_trace(
    event_times_ms: &[f64],
    latency_mean_ms: f64,
    latency_sd_ms: f64,
    params: &SynthParams,
) -> Result<TraceRecording> {
    check_range("latency_sd_ms", latency_sd_ms, latency_sd_ms >= 0.0, ">= 0")?;
    check_range(
        "latency_mean_ms",
        latency_mean_ms,
        latency_mean_ms >= 0.0,
        ">= 0",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dist =
        Normal::new(latency_mean_ms, latency_sd_ms).map_err(|e| Error::Parameter(e.to_string()))?;
    let latencies: Vec<f64> = event_times_ms
        .iter()
        .map(|_| dist.sample(&mut rng).max(0.0))
        .collect();
    render_trace(event_times_ms, &latencies, params, &mut rng)
}

/// Recording with explicitly given per-event latencies.
pub fn synthesize_trace_with_latencies(
    event_times_ms: &[f64],
    latencies_ms: &[f64],
    params: &SynthParams,
) -> Result<TraceRecording> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    render_trace(event_times_ms, latencies_ms, params, &mut rng)
}

fn render_trace(
    event_times_ms: &[f64],
    latencies_ms: &[f64],
    params: &SynthParams,
    rng: &mut ChaCha8Rng,
) -> Result<TraceRecording> {
    let fs = params.sample_rate_hz;
    check_range("sample_rate_hz", fs, fs > 0.0, "> 0")?;
    check_range(
        "pulse_width_ms",
        params.pulse_width_ms,
        params.pulse_width_ms > 0.0,
        "> 0",
    )?;
    check_range("noise_sd", params.noise_sd, params.noise_sd >= 0.0, ">= 0")?;
    check_range(
        "drift_period_ms",
        params.drift_period_ms,
        params.drift_period_ms > 0.0,
        "> 0",
    )?;
    check_range("tail_ms", params.tail_ms, params.tail_ms >= 0.0, ">= 0")?;
    if latencies_ms.len() != event_times_ms.len() {
        return Err(Error::Parameter(format!(
            "{} latencies given for {} events",
            latencies_ms.len(),
            event_times_ms.len()
        )));
    }
    for (k, &t) in event_times_ms.iter().enumerate() {
        check_range("event time", t, t >= 0.0, ">= 0")?;
        check_range(
            "event latency",
            latencies_ms[k],
            latencies_ms[k] >= 0.0,
            ">= 0",
        )?;
        if k > 0 && t - event_times_ms[k - 1] <= params.pulse_width_ms {
            return Err(Error::Parameter(format!(
                "events {} and {k} at {} ms and {t} ms overlap with {} ms pulses",
                k - 1,
                event_times_ms[k - 1],
                params.pulse_width_ms
            )));
        }
    }

    let end_ms = event_times_ms
        .iter()
        .zip(latencies_ms)
        .map(|(t, l)| t + l + params.pulse_width_ms)
        .fold(0.0, f64::max)
        + params.tail_ms;
    let n = (ms_to_samples(end_ms, fs).ceil() as usize).max(1);
    let mut tag = vec![0.0; n];
    let mut photo = vec![0.0; n];
    let fill = |channel: &mut [f64], start_ms: f64| {
        let lo = ms_to_samples(start_ms, fs).round() as usize;
        let hi = (ms_to_samples(start_ms + params.pulse_width_ms, fs).round() as usize).min(n);
        for s in &mut channel[lo.min(n)..hi] {
            *s = 1.0;
        }
    };
    for (&t, &l) in event_times_ms.iter().zip(latencies_ms) {
        fill(&mut tag, t);
        fill(&mut photo, t + l);
    }

    let noise = Normal::new(0.0, params.noise_sd).map_err(|e| Error::Parameter(e.to_string()))?;
    let omega = 2.0 * std::f64::consts::PI / params.drift_period_ms;
    for (k, p) in photo.iter_mut().enumerate() {
        let t_ms = k as f64 * 1000.0 / fs;
        *p += params.drift_amplitude * (omega * t_ms).sin();
        if params.noise_sd > 0.0 {
            *p += noise.sample(rng);
        }
    }
    TraceRecording::new(fs, tag, photo)
}

pub const TRACE_HEADER: [&str; 3] = ["sample", "tag", "photo"];

/// Writes the `sample,tag,photo` CSV format.
pub fn write_trace_csv<W: Write>(mut out: W, rec: &TraceRecording) -> Result<()> {
    writeln!(out, "{}", TRACE_HEADER.join(","))?;
    for (k, (t, p)) in rec.tag.iter().zip(&rec.photo).enumerate() {
        writeln!(out, "{k},{t},{p}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the `sample,tag,photo` CSV format; the sample rate is supplied by
/// the caller. Errors carry the 1-based line number.
pub fn read_trace_csv<R: Read>(input: R, sample_rate_hz: f64) -> Result<TraceRecording> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(TRACE_HEADER) {
        return Err(Error::Format {
            line: 1,
            message: format!(
                "expected header 'sample,tag,photo', got '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut tag = Vec::new();
    let mut photo = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| record.get(k).unwrap_or_default();
        let sample: usize = field(0).parse().map_err(|_| Error::Format {
            line,
            message: format!("invalid sample index '{}'", field(0)),
        })?;
        if sample != tag.len() {
            return Err(Error::Format {
                line,
                message: format!("expected sample {}, got {sample}", tag.len()),
            });
        }
        let real = |k: usize, name: &str| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Format {
                    line,
                    message: format!("invalid {name} value '{}'", field(k)),
                })
        };
        tag.push(real(1, "tag")?);
        photo.push(real(2, "photo")?);
    }
    TraceRecording::new(sample_rate_hz, tag, photo)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Format {
            line,
            message: format!("{kind:?}"),
        },
    }
}
