//! Workload fixtures shared by the criterion benchmarks.

use taglat_core::{
    GridIndex, McConfig, Orientation, Sampler, ScreenModel, StimulusMatrix, SynthParams,
    TraceRecording,
};

pub fn screen() -> ScreenModel {
    ScreenModel::new(60.0, 16.0, 6.0, 1920.0, 1080.0, Orientation::Normal).expect("valid screen")
}

pub fn matrix() -> StimulusMatrix {
    StimulusMatrix::new(6, 6, 160.0, 300.0, 140.0, 200.0).expect("valid matrix")
}

pub fn mc_config(n_stimuli: usize, n_trials: usize) -> McConfig {
    McConfig {
        n_stimuli,
        n_trials,
        sampler: Sampler::WithReplacement,
        seed: 1,
        ..McConfig::new(matrix(), screen(), GridIndex::new(2, 2).into())
    }
}

/// A 100-event recording at 1 kHz with noise and drift.
pub fn trace(n_events: usize) -> TraceRecording {
    let times: Vec<f64> = (0..n_events).map(|k| 250.0 + 500.0 * k as f64).collect();
    let params = SynthParams {
        noise_sd: 0.05,
        drift_amplitude: 0.5,
        seed: 3,
        ..SynthParams::default()
    };
    taglat_core::synthesize_trace(&times, 38.0, 5.3, &params).expect("valid trace")
}
