//! End-to-end tag-to-photodiode latency for the two tagging pipelines.
//!
//! Pipeline A tags after software rendering, so the texture is ready when
//! the tag fires. Pipeline B tags before rendering and pays `SoR` on top.
//! Frame scheduling against the refresh clock turns `ScR` into the
//! perceived `PScR`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::display::{cell_height, scr, GridIndex, ScreenModel, StimulusMatrix};
use crate::error::{check_fraction, check_range, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PipelineVariant {
    /// `SoR -> tag -> ScR`
    #[default]
    A,
    /// `tag -> SoR -> ScR`
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagDispatch {
    #[default]
    Synchronous,
    Asynchronous,
}

impl std::str::FromStr for PipelineVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            other => Err(Error::Parameter(format!(
                "unknown pipeline variant '{other}' (expected A or B)"
            ))),
        }
    }
}

impl std::str::FromStr for TagDispatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "synchronous" | "sync" => Ok(Self::Synchronous),
            "asynchronous" | "async" => Ok(Self::Asynchronous),
            other => Err(Error::Parameter(format!(
                "unknown tag dispatch '{other}' (expected synchronous or asynchronous)"
            ))),
        }
    }
}

/// Software rendering timing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub fps: f64,
    /// Texture display waits for the next refresh boundary.
    pub vsync: bool,
    pub n_cameras: usize,
    /// All cameras are drawn within one frame.
    pub single_pass: bool,
    /// Constant software-rendering duration.
    pub sor_ms: f64,
    /// The tag is emitted in step with the refresh clock, which removes the
    /// refresh-phase jitter term.
    pub phase_locked: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            fps: 60.0,
            vsync: true,
            n_cameras: 1,
            single_pass: false,
            sor_ms: 0.0,
            phase_locked: false,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("fps", self.fps, self.fps > 0.0, "> 0")?;
        check_range("sor_ms", self.sor_ms, self.sor_ms >= 0.0, ">= 0")?;
        if self.n_cameras == 0 {
            return Err(Error::Parameter("n_cameras must be at least 1".into()));
        }
        Ok(())
    }

    pub fn frame_time_ms(&self) -> f64 {
        1000.0 / self.fps
    }

    /// Several cameras drawn in separate frames.
    pub fn is_multipass(&self) -> bool {
        self.n_cameras > 1 && !self.single_pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PipelineConfig {
    pub variant: PipelineVariant,
    pub tag_dispatch: TagDispatch,
    /// Mean of the residual driver/acquisition delay `e`.
    pub e_mean_ms: f64,
    pub e_jitter_sd_ms: f64,
    pub render: RenderConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("e_mean_ms", self.e_mean_ms, self.e_mean_ms >= 0.0, ">= 0")?;
        check_range(
            "e_jitter_sd_ms",
            self.e_jitter_sd_ms,
            self.e_jitter_sd_ms >= 0.0,
            ">= 0",
        )?;
        self.render.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatencyFlag {
    /// FPS below RR: textures may be shown for several refreshes.
    FpsBelowRefresh,
    /// Vsync off: two frames can share one refresh.
    TearingRisk,
    /// Cameras rendered in separate frames; first-appearance selection applies.
    Multipass,
}

impl LatencyFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            LatencyFlag::FpsBelowRefresh => "fps_below_refresh",
            LatencyFlag::TearingRisk => "tearing_risk",
            LatencyFlag::Multipass => "multipass",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyBreakdown {
    pub sor_ms: f64,
    pub pscr_ms: f64,
    pub e_ms: f64,
    pub total_ms: f64,
    pub flags: Vec<LatencyFlag>,
}

/// Perceived screen rendering: time from texture completion to the stimulus
/// at scan fraction `h` being switched on screen.
///
/// `texture_ready_offset_ms` is measured from the most recent refresh
/// boundary; only its phase within the refresh period matters.
pub fn pscr(
    screen: &ScreenModel,
    render: &RenderConfig,
    h: f64,
    texture_ready_offset_ms: f64,
) -> Result<f64> {
    check_fraction("h", h)?;
    check_range(
        "texture_ready_offset_ms",
        texture_ready_offset_ms,
        texture_ready_offset_ms >= 0.0,
        ">= 0",
    )?;
    let period = screen.refresh_period_ms();
    let phase = texture_ready_offset_ms.rem_euclid(period);
    let line_ms = screen.scan_time_a_ms() * h;
    let b = screen.pixel_response_b_ms();
    let wait = if render.vsync {
        if phase == 0.0 {
            0.0
        } else {
            period - phase
        }
    } else if phase <= line_ms {
        // the raster has not reached line h yet in this refresh
        return Ok(line_ms - phase + b);
    } else {
        period - phase
    };
    Ok(wait + scr(screen, h)?)
}

/// Interval between two consecutive textures reaching the screen.
pub fn texture_display_gap_ms(screen: &ScreenModel, render: &RenderConfig) -> f64 {
    let frame = render.frame_time_ms();
    if render.vsync {
        let period = screen.refresh_period_ms();
        let refreshes = (frame / period - 1e-9).ceil().max(1.0);
        refreshes * period
    } else {
        frame
    }
}

pub fn latency_flags(screen: &ScreenModel, render: &RenderConfig) -> Vec<LatencyFlag> {
    let mut flags = Vec::new();
    if render.fps < screen.refresh_rate_hz() {
        flags.push(LatencyFlag::FpsBelowRefresh);
    }
    if !render.vsync {
        flags.push(LatencyFlag::TearingRisk);
    }
    if render.is_multipass() {
        flags.push(LatencyFlag::Multipass);
    }
    flags
}

/// Deterministic latency of the stimulus at `idx`, with the texture ready on
/// a refresh boundary and `e` at its mean.
pub fn pipeline_latency(
    pipeline: &PipelineConfig,
    screen: &ScreenModel,
    matrix: &StimulusMatrix,
    idx: GridIndex,
) -> Result<LatencyBreakdown> {
    pipeline_latency_at_phase(pipeline, screen, matrix, idx, 0.0)
}

pub fn pipeline_latency_at_phase(
    pipeline: &PipelineConfig,
    screen: &ScreenModel,
    matrix: &StimulusMatrix,
    idx: GridIndex,
    texture_ready_offset_ms: f64,
) -> Result<LatencyBreakdown> {
    pipeline.validate()?;
    let h = cell_height(matrix, screen, idx)?;
    pipeline_latency_at_height(pipeline, screen, h, texture_ready_offset_ms)
}

pub fn pipeline_latency_at_height(
    pipeline: &PipelineConfig,
    screen: &ScreenModel,
    h: f64,
    texture_ready_offset_ms: f64,
) -> Result<LatencyBreakdown> {
    let sor_ms = match pipeline.variant {
        PipelineVariant::A => 0.0,
        PipelineVariant::B => pipeline.render.sor_ms,
    };
    let pscr_ms = pscr(screen, &pipeline.render, h, texture_ready_offset_ms)?;
    let e_ms = pipeline.e_mean_ms;
    Ok(LatencyBreakdown {
        sor_ms,
        pscr_ms,
        e_ms,
        total_ms: sor_ms + pscr_ms + e_ms,
        flags: latency_flags(screen, &pipeline.render),
    })
}

/// Latency of each camera's appearance of the stimulus at `idx`.
///
/// With multi-pass rendering camera `k` reaches the screen `k` texture
/// intervals after the first; single-pass rendering shows all of them in
/// the same frame.
pub fn camera_latencies(
    pipeline: &PipelineConfig,
    screen: &ScreenModel,
    matrix: &StimulusMatrix,
    idx: GridIndex,
) -> Result<Vec<f64>> {
    let base = pipeline_latency(pipeline, screen, matrix, idx)?.total_ms;
    let step = if pipeline.render.single_pass {
        0.0
    } else {
        texture_display_gap_ms(screen, &pipeline.render)
    };
    Ok((0..pipeline.render.n_cameras)
        .map(|k| base + k as f64 * step)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LofapSelection {
    /// Latency of the first appearance.
    pub selected_ms: f64,
    /// Spread between appearances exceeded the threshold.
    pub multipass_detected: bool,
}

/// Default spread above which appearances count as separate frames: the
/// full-screen scan time.
pub fn default_multipass_threshold(screen: &ScreenModel) -> f64 {
    screen.scan_time_a_ms()
}

/// Latency-of-first-appearance selection over per-camera latencies.
pub fn lofap_select(camera_latencies_ms: &[f64], threshold_ms: f64) -> Result<LofapSelection> {
    if camera_latencies_ms.is_empty() {
        return Err(Error::EmptyInput("lofap_select needs at least one latency"));
    }
    check_range("threshold_ms", threshold_ms, threshold_ms >= 0.0, ">= 0")?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &l in camera_latencies_ms {
        check_range("camera latency", l, l >= 0.0, ">= 0")?;
        min = min.min(l);
        max = max.max(l);
    }
    Ok(LofapSelection {
        selected_ms: min,
        multipass_detected: max - min > threshold_ms,
    })
}

/// Standard-deviation contributions to the tag-to-photodiode latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterBudget {
    pub e_sd_ms: f64,
    /// Uniform refresh phase, `period / sqrt(12)`.
    pub phase_sd_ms: f64,
    /// Tag dispatch racing the render loop, `frame / sqrt(12)`.
    pub dispatch_sd_ms: f64,
    pub total_sd_ms: f64,
}

/// The dispatch term is active when the tag and the render loop can race:
/// a synchronous tag in pipeline B is blocked behind rendering, and an
/// asynchronous tag in pipeline A can complete after the frame is out.
fn dispatch_races_render(pipeline: &PipelineConfig) -> bool {
    matches!(
        (pipeline.variant, pipeline.tag_dispatch),
        (PipelineVariant::B, TagDispatch::Synchronous)
            | (PipelineVariant::A, TagDispatch::Asynchronous)
    )
}

pub fn jitter_components(pipeline: &PipelineConfig, screen: &ScreenModel) -> JitterBudget {
    let sqrt12 = 12f64.sqrt();
    let phase_sd_ms = if pipeline.render.phase_locked {
        0.0
    } else {
        screen.refresh_period_ms() / sqrt12
    };
    let dispatch_sd_ms = if dispatch_races_render(pipeline) {
        pipeline.render.frame_time_ms() / sqrt12
    } else {
        0.0
    };
    let e_sd_ms = pipeline.e_jitter_sd_ms;
    JitterBudget {
        e_sd_ms,
        phase_sd_ms,
        dispatch_sd_ms,
        total_sd_ms: (e_sd_ms.powi(2) + phase_sd_ms.powi(2) + dispatch_sd_ms.powi(2)).sqrt(),
    }
}

/// Root-sum-square latency jitter estimate.
pub fn jitter_budget(pipeline: &PipelineConfig, screen: &ScreenModel) -> f64 {
    jitter_components(pipeline, screen).total_sd_ms
}

/// Draws one measured latency for the stimulus at scan fraction `h`.
///
/// The refresh phase is uniform over one period unless phase-locked, `e` is
/// normal, and a racing tag dispatch is recorded late by a uniform fraction
/// of a software frame.
pub fn sample_latency<R: Rng + ?Sized>(
    pipeline: &PipelineConfig,
    screen: &ScreenModel,
    h: f64,
    rng: &mut R,
) -> Result<f64> {
    let phase = if pipeline.render.phase_locked {
        0.0
    } else {
        rng.random_range(0.0..screen.refresh_period_ms())
    };
    let base = pipeline_latency_at_height(pipeline, screen, h, phase)?;
    let e = if pipeline.e_jitter_sd_ms > 0.0 {
        Normal::new(pipeline.e_mean_ms, pipeline.e_jitter_sd_ms)
            .map_err(|err| Error::Parameter(err.to_string()))?
            .sample(rng)
    } else {
        pipeline.e_mean_ms
    };
    let late_tag = if dispatch_races_render(pipeline) {
        rng.random_range(0.0..pipeline.render.frame_time_ms())
    } else {
        0.0
    };
    Ok(base.sor_ms + base.pscr_ms + e - late_tag)
}
