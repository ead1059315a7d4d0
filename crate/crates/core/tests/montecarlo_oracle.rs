//! Monte Carlo results checked against exact enumeration of the barycentre
//! distribution.

use taglat_core::display::ms_per_step;
use taglat_core::montecarlo::{dist_curve_with, run_mc_with, Execution};
use taglat_core::{
    GridIndex, GridPoint, McConfig, Orientation, Sampler, ScreenModel, StimulusMatrix,
};

/// Exact distribution of the sum of `n` draws uniform over `0..k`, as
/// (sum, probability) pairs, by repeated convolution.
fn sum_distribution(n: usize, k: usize) -> Vec<(usize, f64)> {
    let mut counts = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![0.0; counts.len() + k - 1];
        for (s, c) in counts.iter().enumerate() {
            for v in 0..k {
                next[s + v] += c / k as f64;
            }
        }
        counts = next;
    }
    counts.into_iter().enumerate().collect()
}

/// `E|S/n - c|` and `SD(|S/n - c|)` for the mean of `n` uniform indices.
fn exact_abs_distance(n: usize, k: usize, c: f64) -> (f64, f64) {
    let dist = sum_distribution(n, k);
    let m1: f64 = dist
        .iter()
        .map(|&(s, p)| p * (s as f64 / n as f64 - c).abs())
        .sum();
    let m2: f64 = dist
        .iter()
        .map(|&(s, p)| p * (s as f64 / n as f64 - c).powi(2))
        .sum();
    (m1, (m2 - m1 * m1).sqrt())
}

fn config(n_stimuli: usize, photodiode: GridPoint, orientation: Orientation) -> McConfig {
    let matrix = StimulusMatrix::new(6, 6, 160.0, 120.0, 100.0, 100.0).unwrap();
    let screen = ScreenModel::new(60.0, 16.0, 6.0, 1000.0, 1000.0, orientation).unwrap();
    McConfig {
        n_stimuli,
        n_trials: 10_000,
        sampler: Sampler::WithReplacement,
        seed: 20181206,
        ..McConfig::new(matrix, screen, photodiode)
    }
}

#[test]
fn oracle_reproduces_frozen_values() {
    let (m, _) = exact_abs_distance(12, 6, 2.5);
    assert!((m - 0.394_197_709).abs() < 1e-8);
    let (m, sd) = exact_abs_distance(12, 6, 2.0);
    assert!((m - 0.579_362_700).abs() < 1e-8);
    assert!((sd - 0.396_729_652).abs() < 1e-8);
    // folded-normal approximation of the centred case
    let sigma = (35.0f64 / 12.0 / 12.0).sqrt();
    assert!((sigma * (2.0 / std::f64::consts::PI).sqrt() - 0.3934).abs() < 1e-4);
}

#[test]
fn centred_photodiode_has_folded_mean_floor() {
    let r = run_mc_with(
        &config(12, GridPoint { i: 2.5, j: 2.5 }, Orientation::Normal),
        Execution::Parallel,
    )
    .unwrap();
    let (exact, exact_sd) = exact_abs_distance(12, 6, 2.5);
    assert!(
        (r.mean_row_dist - exact).abs() < 0.01,
        "{}",
        r.mean_row_dist
    );
    assert!((r.mean_col_dist - exact).abs() < 0.01);
    assert!((r.sd_row_dist - exact_sd).abs() < 0.01);
    assert!((r.mean_row_dist - 0.39).abs() <= 0.02);
    assert!(r.mean_row_dist > 0.3);
}

#[test]
fn off_centre_photodiode_matches_enumeration() {
    let r = run_mc_with(
        &config(12, GridIndex::new(2, 2).into(), Orientation::Normal),
        Execution::Parallel,
    )
    .unwrap();
    let (exact, exact_sd) = exact_abs_distance(12, 6, 2.0);
    assert!(
        (r.mean_row_dist - exact).abs() < 0.012,
        "{}",
        r.mean_row_dist
    );
    assert!((r.sd_row_dist - exact_sd).abs() < 0.01);
    // signed mean is the bias of the barycentre, half a stimulus
    assert!((r.signed.mean_row - 0.5).abs() < 0.02);
}

#[test]
fn single_stimulus_distance_is_cell_average() {
    let exact: f64 = (0..6).map(|i| (i as f64 - 2.0).abs()).sum::<f64>() / 6.0;
    assert_eq!(exact, 1.5);
    let curve = dist_curve_with(
        &config(1, GridIndex::new(2, 2).into(), Orientation::Normal),
        &[1],
        Execution::Serial,
    )
    .unwrap();
    assert!(
        (curve[0].mean_dist - exact).abs() < 0.03,
        "{}",
        curve[0].mean_dist
    );
}

#[test]
fn barycentre_sd_scales_with_inverse_sqrt_n() {
    let cfg = config(12, GridPoint { i: 2.5, j: 2.5 }, Orientation::Normal);
    let curve = dist_curve_with(&cfg, &[12, 48], Execution::Parallel).unwrap();
    let ratio = curve[0].result.signed.sd_row / curve[1].result.signed.sd_row;
    assert!((ratio - 2.0).abs() <= 0.2, "ratio {ratio}");
    let expected = (35.0f64 / 12.0 / 12.0).sqrt();
    assert!((curve[0].result.signed.sd_row - expected).abs() / expected < 0.03);
    assert!(curve[0].sd_dist > curve[1].sd_dist);
}

#[test]
fn latency_uses_scan_axis_of_orientation() {
    for orientation in [Orientation::Normal, Orientation::Turned90] {
        let cfg = config(12, GridIndex::new(2, 2).into(), orientation);
        let r = run_mc_with(&cfg, Execution::Parallel).unwrap();
        let factor = ms_per_step(&cfg.matrix, &cfg.screen);
        let dist = match orientation {
            Orientation::Normal => r.mean_row_dist,
            Orientation::Turned90 => r.mean_col_dist,
        };
        assert!((r.mean_latency_ms - factor * dist).abs() < 1e-12);
    }
}

#[test]
fn schedule_does_not_change_result() {
    let cfg = config(12, GridIndex::new(2, 2).into(), Orientation::Turned90);
    let serial = run_mc_with(&cfg, Execution::Serial).unwrap();
    for _ in 0..3 {
        assert_eq!(run_mc_with(&cfg, Execution::Parallel).unwrap(), serial);
    }
}
