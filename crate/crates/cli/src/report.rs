//! Guideline-compliance report for a display/pipeline configuration.

use std::fmt::{self, Write as _};

use taglat_core::display::{ms_per_step, point_offset};
use taglat_core::pipeline::{camera_latencies, jitter_components, JitterBudget};
use taglat_core::{
    lofap_select, max_latency_spread, Orientation, PipelineVariant, Sampler, ScreenModel,
    TagDispatch,
};

use crate::config::RunConfig;
use crate::CliError;

/// Refresh rate from which a monitor counts as fast.
pub const FAST_REFRESH_HZ: f64 = 140.0;
/// Full-screen rendering time commonly quoted for 60 Hz panels.
pub const REFERENCE_FULL_REFRESH_MS: f64 = 20.0;
/// Spread above this fraction of the scan time is reported as at the limit.
pub const AT_LIMIT_FRACTION: f64 = 0.9;
/// Barycentre SD regarded as predictable.
pub const PREDICTABLE_BARYCENTRE_SD_MS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Warn,
    AtLimit,
    Fail,
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Warn => "warn",
            Status::AtLimit => "at-limit",
            Status::Fail => "fail",
            Status::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: &'static str,
    pub status: Status,
    pub message: String,
}

/// Cumulative uncertainty when comparing two averaged ERPs recorded with
/// an unknown barycentre or photodiode location: twice the worst-case
/// latency between two pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyBound {
    /// `a + b`.
    pub scan_render_ms: f64,
    pub bound_scan_ms: f64,
    /// Full-refresh reading: 20 ms at 60 Hz, scaled with the refresh period
    /// unless configured.
    pub full_refresh_ms: f64,
    pub bound_refresh_ms: f64,
}

impl UncertaintyBound {
    pub fn new(screen: &ScreenModel, full_refresh_ms: Option<f64>) -> Self {
        let scan_render_ms = screen.scan_time_a_ms() + screen.pixel_response_b_ms();
        let full_refresh_ms =
            full_refresh_ms.unwrap_or(REFERENCE_FULL_REFRESH_MS * 60.0 / screen.refresh_rate_hz());
        Self {
            scan_render_ms,
            bound_scan_ms: 2.0 * scan_render_ms,
            full_refresh_ms,
            bound_refresh_ms: 2.0 * full_refresh_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub screen: ScreenModel,
    pub bound: UncertaintyBound,
    pub spread_ms: f64,
    pub jitter: JitterBudget,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }
}

pub fn build_report(config: &RunConfig) -> Result<Report, CliError> {
    let screen = *config.screen()?;
    let matrix = *config.matrix()?;
    let pipeline = config.pipeline;
    let render = pipeline.render;
    let bound = UncertaintyBound::new(&screen, config.full_refresh_ms);
    let spread_ms = max_latency_spread(&matrix, &screen);
    let period = screen.refresh_period_ms();
    let a = screen.scan_time_a_ms();
    let mut checks = Vec::new();

    checks.push(Check {
        id: "uncertainty_bound",
        status: Status::Info,
        message: format!(
            "2 x (a + b) = {:.3} ms; 2 x full-refresh {:.3} ms = {:.3} ms; \
             a + b and the full-refresh reading differ when the pixel response overlaps the scan",
            bound.bound_scan_ms, bound.full_refresh_ms, bound.bound_refresh_ms
        ),
    });

    let spread_status = if spread_ms >= period {
        Status::Fail
    } else if spread_ms >= AT_LIMIT_FRACTION * a {
        Status::AtLimit
    } else {
        Status::Ok
    };
    checks.push(Check {
        id: "latency_spread",
        status: spread_status,
        message: format!(
            "max latency between stimuli {spread_ms:.3} ms vs refresh period {period:.3} ms (scan time {a:.3} ms)"
        ),
    });

    let (status, message) = match (pipeline.variant, pipeline.tag_dispatch) {
        (PipelineVariant::A, TagDispatch::Synchronous) => (
            Status::Ok,
            "pipeline A with synchronous tagging".to_string(),
        ),
        (PipelineVariant::B, TagDispatch::Asynchronous) => (
            Status::Ok,
            "pipeline B with asynchronous tagging: the tag completes before screen rendering"
                .to_string(),
        ),
        (PipelineVariant::A, TagDispatch::Asynchronous) => (
            Status::Warn,
            "asynchronous tagging after rendering may complete after the stimulus is shown; \
             move the tag before rendering (pipeline B) or make it synchronous"
                .to_string(),
        ),
        (PipelineVariant::B, TagDispatch::Synchronous) => (
            Status::Warn,
            "synchronous tag before rendering is blocked by the render loop; \
             prefer pipeline A, or asynchronous dispatch"
                .to_string(),
        ),
    };
    checks.push(Check {
        id: "guideline_1_pipeline",
        status,
        message,
    });

    checks.push(Check {
        id: "guideline_2_refresh_rate",
        status: if screen.refresh_rate_hz() >= FAST_REFRESH_HZ {
            Status::Ok
        } else {
            Status::Warn
        },
        message: format!(
            "refresh rate {} Hz (>= {FAST_REFRESH_HZ} Hz shortens the scan and the uncertainty bound)",
            screen.refresh_rate_hz()
        ),
    });

    let (status, message) = if !render.vsync {
        (
            Status::Warn,
            "vsync off: tearing can split a stimulus across two frames".to_string(),
        )
    } else if render.fps < screen.refresh_rate_hz() {
        (
            Status::Warn,
            format!(
                "vsync on but FPS {} < RR {} Hz: textures stay up for several refreshes",
                render.fps,
                screen.refresh_rate_hz()
            ),
        )
    } else {
        (
            Status::Ok,
            "vsync on and FPS keeps up with the refresh rate".to_string(),
        )
    };
    checks.push(Check {
        id: "guideline_3_vsync",
        status,
        message,
    });

    let (status, message) = if render.n_cameras <= 1 {
        (Status::Ok, "single camera".to_string())
    } else if render.single_pass {
        (
            Status::Ok,
            format!("{} cameras rendered in a single pass", render.n_cameras),
        )
    } else {
        let lat = camera_latencies(&pipeline, &screen, &matrix, matrix.cell(0))?;
        let threshold = config.multipass_threshold_ms().unwrap_or(a);
        let sel = lofap_select(&lat, threshold)?;
        (
            Status::Warn,
            format!(
                "{} cameras in separate passes, appearances {:.3}..{:.3} ms apart (multipass {}); \
                 enable single-pass rendering or correct with the first-appearance latency",
                render.n_cameras,
                sel.selected_ms,
                lat.iter().cloned().fold(f64::MIN, f64::max),
                sel.multipass_detected
            ),
        )
    };
    checks.push(Check {
        id: "guideline_4_cameras",
        status,
        message,
    });

    let step = ms_per_step(&matrix, &screen);
    let scan_count = match screen.orientation() {
        Orientation::Normal => matrix.rows(),
        Orientation::Turned90 => matrix.cols(),
    } as f64;
    let n = config.mc.n_stimuli[0] as f64;
    let cells = matrix.len() as f64;
    let population_sd = ((scan_count * scan_count - 1.0) / 12.0).sqrt();
    let fpc = match config.mc.sampler {
        Sampler::WithReplacement => 1.0,
        Sampler::WithoutReplacement if cells > 1.0 => ((cells - n) / (cells - 1.0)).max(0.0).sqrt(),
        Sampler::WithoutReplacement => 0.0,
    };
    let bary_sd_ms = step * population_sd / n.sqrt() * fpc;
    checks.push(Check {
        id: "guideline_5_barycentre",
        status: if bary_sd_ms <= PREDICTABLE_BARYCENTRE_SD_MS {
            Status::Ok
        } else {
            Status::Warn
        },
        message: format!(
            "barycentre latency SD for {} uniformly drawn stimuli: {bary_sd_ms:.3} ms",
            config.mc.n_stimuli[0]
        ),
    });

    let centre = matrix.centre();
    let photodiode = config.mc.photodiode.unwrap_or(centre);
    let photo_offset = point_offset(&matrix, &screen, photodiode, centre)?;
    checks.push(Check {
        id: "guideline_6_photodiode",
        status: if photo_offset <= step / 2.0 + 1e-12 {
            Status::Ok
        } else {
            Status::Warn
        },
        message: format!(
            "photodiode at ({}, {}) is {photo_offset:.3} ms from the uniform barycentre ({}, {}); \
             keep the same location in every condition",
            photodiode.i, photodiode.j, centre.i, centre.j
        ),
    });

    checks.push(Check {
        id: "guideline_7_subjects",
        status: Status::Info,
        message: "assess each subject under both conditions, use a large sample, and exclude \
                  subjects with trained vision (pilots, competitive gamers); perception of frame \
                  rate varies between subjects and is not modelled here"
            .to_string(),
    });

    Ok(Report {
        screen,
        bound,
        spread_ms,
        jitter: jitter_components(&pipeline, &screen),
        checks,
    })
}

pub fn render(report: &Report) -> String {
    let s = &report.screen;
    let b = &report.bound;
    let j = &report.jitter;
    let mut out = String::new();
    writeln!(out, "refresh_rate_hz: {}", s.refresh_rate_hz()).unwrap();
    writeln!(out, "refresh_period_ms: {:.3}", s.refresh_period_ms()).unwrap();
    writeln!(out, "scan_time_a_ms: {}", s.scan_time_a_ms()).unwrap();
    writeln!(out, "pixel_response_b_ms: {}", s.pixel_response_b_ms()).unwrap();
    writeln!(out, "orientation: {}", s.orientation().as_str()).unwrap();
    writeln!(out, "uncertainty_bound_ms: {:.3}", b.bound_scan_ms).unwrap();
    writeln!(
        out,
        "uncertainty_bound_full_refresh_ms: {:.3}",
        b.bound_refresh_ms
    )
    .unwrap();
    writeln!(out, "full_refresh_ms: {:.3}", b.full_refresh_ms).unwrap();
    writeln!(out, "reference_band_60hz_ms: 30-40").unwrap();
    writeln!(out, "max_latency_spread_ms: {:.3}", report.spread_ms).unwrap();
    writeln!(
        out,
        "jitter_sd_ms: {:.3} (e {:.3}, refresh phase {:.3}, tag dispatch {:.3})",
        j.total_sd_ms, j.e_sd_ms, j.phase_sd_ms, j.dispatch_sd_ms
    )
    .unwrap();
    for c in &report.checks {
        writeln!(out, "[{}] {}: {}", c.status, c.id, c.message).unwrap();
    }
    out
}
