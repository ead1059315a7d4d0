//! Tag-to-photon latency toolkit.
//!
//! Models the delay between a software tag and the physical appearance of a
//! stimulus on a raster-scanned display, simulates how the barycentre of the
//! displayed stimuli biases a photodiode-based latency estimate, measures
//! latency from recorded tag/photodiode traces and applies the resulting
//! offsets to stimulus-locked epochs.

pub mod display;
pub mod epoch;
pub mod error;
pub mod montecarlo;
pub mod pipeline;
pub mod stats;
pub mod trace;

pub use display::{
    barycentre, barycentre_offset, delta_latency, height, max_latency_spread, position, scr,
    Barycentre, GridIndex, GridPoint, Orientation, ScreenModel, StimulusMatrix,
};
pub use epoch::{average, correct_offset, jitter_attenuation, EpochSet};
pub use error::{Error, Result};
pub use montecarlo::{dist_curve, run_mc, CurvePoint, Execution, McConfig, McResult, Sampler};
pub use pipeline::{
    jitter_budget, lofap_select, pipeline_latency, pscr, LatencyBreakdown, LatencyFlag,
    LofapSelection, PipelineConfig, PipelineVariant, RenderConfig, TagDispatch,
};
pub use trace::{
    analyze_trace, detect_onsets, estimate_latency, pair_events, remove_drift, synthesize_trace,
    AnalysisParams, LatencyEstimate, Pairing, SynthParams, TraceAnalysis, TraceRecording,
};
