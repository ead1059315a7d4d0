use std::fmt::Write as _;
use std::path::Path;

use taglat_core::display::{height, point_position};
use taglat_core::epoch::{read_epochs_csv, write_epochs_csv};
use taglat_core::montecarlo::{dist_curve_with, Execution, RNG_ALGORITHM};
use taglat_core::pipeline::pipeline_latency_at_height;
use taglat_core::trace::{
    read_trace_csv, synthesize_trace_with_latencies, write_trace_csv, OnsetDetector,
};
use taglat_core::{
    analyze_trace, correct_offset, pipeline_latency, synthesize_trace, AnalysisParams, McConfig,
    McResult, SynthParams,
};

use crate::config::RunConfig;
use crate::CliError;

/// Latency of every cell, row-major, followed by a `#` line for the
/// full-grid barycentre.
pub fn model(config: &RunConfig) -> Result<String, CliError> {
    let screen = config.screen()?;
    let matrix = config.matrix()?;
    let pipeline = &config.pipeline;
    let mut out = String::from("i,j,h,pscr_ms,total_ms\n");
    for idx in matrix.cells() {
        let h = taglat_core::display::cell_height(matrix, screen, idx)?;
        let l = pipeline_latency(pipeline, screen, matrix, idx)?;
        writeln!(
            out,
            "{},{},{},{},{}",
            idx.i, idx.j, h, l.pscr_ms, l.total_ms
        )
        .unwrap();
    }
    let centre = matrix.centre();
    let (x, y) = point_position(matrix, screen, centre)?;
    let h = height(x, y, screen)?;
    let l = pipeline_latency_at_height(pipeline, screen, h, 0.0)?;
    writeln!(
        out,
        "# barycentre,{},{},{},{},{}",
        centre.i, centre.j, h, l.pscr_ms, l.total_ms
    )
    .unwrap();
    Ok(out)
}

pub struct MonteCarloOptions {
    pub n_values: Option<Vec<usize>>,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
    pub signed: bool,
    pub execution: Execution,
}

pub fn montecarlo(config: &RunConfig, opts: &MonteCarloOptions) -> Result<String, CliError> {
    let screen = *config.screen()?;
    let matrix = *config.matrix()?;
    let settings = &config.mc;
    let photodiode = settings.photodiode.unwrap_or_else(|| matrix.centre());
    let signed = opts.signed || settings.signed;
    let mc = McConfig {
        n_trials: opts.n_trials.unwrap_or(settings.n_trials),
        sampler: settings.sampler,
        seed: opts.seed.unwrap_or(settings.seed),
        ..McConfig::new(matrix, screen, photodiode)
    };
    let n_values = opts.n_values.as_ref().unwrap_or(&settings.n_stimuli);
    let curve = dist_curve_with(&mc, n_values, opts.execution).map_err(|e| match e {
        taglat_core::Error::Config(m) => CliError::Usage(m),
        other => other.into(),
    })?;

    let mut out = String::new();
    writeln!(
        out,
        "# rng={RNG_ALGORITHM} seed={} sampler={} trials={} photodiode=({},{}) distance={}",
        mc.seed,
        mc.sampler.as_str(),
        mc.n_trials,
        photodiode.i,
        photodiode.j,
        if signed { "signed" } else { "absolute" }
    )
    .unwrap();
    out.push_str("n,mean_row,sd_row,mean_col,sd_col,mean_ms,sd_ms\n");
    for point in &curve {
        let r: &McResult = &point.result;
        let row = if signed {
            let s = &r.signed;
            [
                s.mean_row,
                s.sd_row,
                s.mean_col,
                s.sd_col,
                s.mean_latency_ms,
                s.sd_latency_ms,
            ]
        } else {
            [
                r.mean_row_dist,
                r.sd_row_dist,
                r.mean_col_dist,
                r.sd_col_dist,
                r.mean_latency_ms,
                r.sd_latency_ms,
            ]
        };
        write!(out, "{}", point.n).unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub struct AnalyzeOptions {
    pub fs: f64,
    pub threshold: f64,
    pub window_ms: f64,
    pub max_latency_ms: f64,
    pub min_separation_ms: f64,
    pub multipass_threshold_ms: Option<f64>,
}

/// Default multipass threshold for traces analysed without a screen.
pub const FALLBACK_MULTIPASS_THRESHOLD_MS: f64 = 20.0;

pub fn analyze(
    config: Option<&RunConfig>,
    trace_path: &Path,
    opts: &AnalyzeOptions,
) -> Result<String, CliError> {
    let file = std::fs::File::open(trace_path)
        .map_err(|e| CliError::Usage(format!("cannot open trace {}: {e}", trace_path.display())))?;
    let rec = read_trace_csv(std::io::BufReader::new(file), opts.fs).map_err(|e| match e {
        taglat_core::Error::Range { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(format!("{}: {other}", trace_path.display())),
    })?;
    let multipass = opts
        .multipass_threshold_ms
        .or_else(|| config.and_then(RunConfig::multipass_threshold_ms))
        .unwrap_or(FALLBACK_MULTIPASS_THRESHOLD_MS);
    let params = AnalysisParams {
        detector: OnsetDetector {
            threshold_fraction: opts.threshold,
            min_separation_ms: opts.min_separation_ms,
            ..OnsetDetector::default()
        },
        window_ms: opts.window_ms,
        max_latency_ms: opts.max_latency_ms,
        multipass_threshold_ms: multipass,
    };
    let analysis = analyze_trace(&rec, &params).map_err(|e| match e {
        taglat_core::Error::EmptyInput(_) => {
            CliError::Analysis("no tag/photodiode event pairs found".into())
        }
        other => CliError::Usage(other.to_string()),
    })?;

    let est = &analysis.estimate;
    let mut out = String::new();
    writeln!(out, "samples: {}", rec.len()).unwrap();
    writeln!(out, "sample_rate_hz: {}", rec.sample_rate_hz()).unwrap();
    writeln!(out, "events: {}", est.n_events).unwrap();
    writeln!(out, "mean_ms: {:.3}", est.mean_ms).unwrap();
    writeln!(out, "sd_ms: {:.3}", est.sd_ms).unwrap();
    let (min, max) = est
        .per_event_ms
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    writeln!(out, "min_ms: {min:.3}").unwrap();
    writeln!(out, "max_ms: {max:.3}").unwrap();
    writeln!(
        out,
        "unpaired_tags: {}",
        analysis.pairing.unpaired_tags.len()
    )
    .unwrap();
    writeln!(
        out,
        "unpaired_photos: {}",
        analysis.pairing.unpaired_photos.len()
    )
    .unwrap();
    writeln!(out, "multipass_threshold_ms: {multipass:.3}").unwrap();
    if !analysis.pairing.unpaired_tags.is_empty() {
        writeln!(
            out,
            "warning: {} tag onset(s) without a photodiode onset within {} ms (samples {:?})",
            analysis.pairing.unpaired_tags.len(),
            opts.max_latency_ms,
            analysis.pairing.unpaired_tags
        )
        .unwrap();
    }
    if !analysis.pairing.unpaired_photos.is_empty() {
        writeln!(
            out,
            "warning: {} photodiode onset(s) not preceded by a tag (samples {:?})",
            analysis.pairing.unpaired_photos.len(),
            analysis.pairing.unpaired_photos
        )
        .unwrap();
    }
    match analysis.bimodality {
        Some(b) => {
            writeln!(
                out,
                "warning: bimodal latencies {:.3} ms (n={}) and {:.3} ms (n={}), separation {:.3} ms > {:.3} ms; \
                 multipass rendering likely, first-appearance latency {:.3} ms",
                b.low_mean_ms,
                b.low_count,
                b.high_mean_ms,
                b.high_count,
                b.separation_ms(),
                multipass,
                b.low_mean_ms
            )
            .unwrap();
            writeln!(out, "bimodal: true").unwrap();
        }
        None => writeln!(out, "bimodal: false").unwrap(),
    }
    Ok(out)
}

pub struct CorrectOutput {
    pub csv: String,
    pub shift_samples: i64,
}

pub fn correct(
    epochs_path: &Path,
    offset_ms: f64,
    fs: f64,
    t0_ms: f64,
) -> Result<CorrectOutput, CliError> {
    let file = std::fs::File::open(epochs_path).map_err(|e| {
        CliError::Usage(format!("cannot open epochs {}: {e}", epochs_path.display()))
    })?;
    let set = read_epochs_csv(std::io::BufReader::new(file), fs, t0_ms).map_err(|e| match e {
        taglat_core::Error::Range { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(format!("{}: {other}", epochs_path.display())),
    })?;
    let fixed = correct_offset(&set, offset_ms).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    write_epochs_csv(&mut buf, &fixed)?;
    Ok(CorrectOutput {
        csv: String::from_utf8(buf).expect("ascii csv"),
        shift_samples: fixed.shift_samples(),
    })
}

pub struct SynthesizeOptions {
    pub events: usize,
    pub start_ms: f64,
    pub spacing_ms: f64,
    pub latency_mean_ms: f64,
    pub latency_sd_ms: f64,
    /// Cycled per event instead of drawing from the normal distribution.
    pub latencies_ms: Option<Vec<f64>>,
    pub params: SynthParams,
}

pub fn synthesize(opts: &SynthesizeOptions) -> Result<String, CliError> {
    let times: Vec<f64> = (0..opts.events)
        .map(|k| opts.start_ms + k as f64 * opts.spacing_ms)
        .collect();
    let rec = match &opts.latencies_ms {
        Some(cycle) if cycle.is_empty() => {
            return Err(CliError::Usage(
                "--latencies needs at least one value".into(),
            ))
        }
        Some(cycle) => {
            let lat: Vec<f64> = (0..opts.events).map(|k| cycle[k % cycle.len()]).collect();
            synthesize_trace_with_latencies(&times, &lat, &opts.params)
        }
        None => synthesize_trace(
            &times,
            opts.latency_mean_ms,
            opts.latency_sd_ms,
            &opts.params,
        ),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, &rec)?;
    Ok(String::from_utf8(buf).expect("ascii csv"))
}
