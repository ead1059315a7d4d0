use proptest::prelude::*;
use taglat_core::display::scr;
use taglat_core::pipeline::{camera_latencies, default_multipass_threshold};
use taglat_core::{
    lofap_select, pipeline_latency, pscr, GridIndex, Orientation, PipelineConfig, PipelineVariant,
    RenderConfig, ScreenModel, StimulusMatrix,
};

fn screen(rr: f64) -> ScreenModel {
    ScreenModel::new(
        rr,
        0.95 * 1000.0 / rr,
        5.0,
        1920.0,
        1080.0,
        Orientation::Normal,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn vsync_pscr_periodic(rr in 30.0f64..240.0, h in 0.0f64..=1.0, off in 0.0f64..50.0, k in 1u32..5) {
        let s = screen(rr);
        let r = RenderConfig::default();
        let base = pscr(&s, &r, h, off).unwrap();
        let shifted = pscr(&s, &r, h, off + k as f64 * s.refresh_period_ms()).unwrap();
        // near-boundary phases may round onto either side of the boundary
        let diff = (base - shifted).abs();
        prop_assert!(diff < 1e-6 || (diff - s.refresh_period_ms()).abs() < 1e-6);
    }

    #[test]
    fn vsync_pscr_waits_for_boundary(rr in 30.0f64..240.0, h in 0.0f64..=1.0, off in 0.0f64..100.0) {
        let s = screen(rr);
        let v = pscr(&s, &RenderConfig::default(), h, off).unwrap();
        let period = s.refresh_period_ms();
        let phase = off.rem_euclid(period);
        let to_boundary = if phase == 0.0 { 0.0 } else { period - phase };
        prop_assert!((v - (to_boundary + scr(&s, h).unwrap())).abs() < 1e-9);
    }

    #[test]
    fn tearing_pscr_is_causal(rr in 30.0f64..240.0, h in 0.0f64..=1.0, off in 0.0f64..100.0) {
        let s = screen(rr);
        let r = RenderConfig { vsync: false, ..RenderConfig::default() };
        let v = pscr(&s, &r, h, off).unwrap();
        let period = s.refresh_period_ms();
        let phase = off.rem_euclid(period);
        // the display instant minus pixel response lands on a raster pass over line h
        let raster = phase + v - s.pixel_response_b_ms();
        let line = s.scan_time_a_ms() * h;
        let passes = (raster - line) / period;
        prop_assert!(v >= s.pixel_response_b_ms() - 1e-9);
        prop_assert!((passes - passes.round()).abs() < 1e-6);
        prop_assert!(v <= period + scr(&s, h).unwrap() + 1e-9);
    }

    #[test]
    fn pipelines_are_additive(sor in 0.0f64..40.0, e in 0.0f64..10.0, k in 0usize..36) {
        let s = screen(60.0);
        let g = StimulusMatrix::new(6, 6, 150.0, 250.0, 100.0, 200.0).unwrap();
        let idx = g.cell(k);
        let render = RenderConfig { sor_ms: sor, ..RenderConfig::default() };
        let a = PipelineConfig { e_mean_ms: e, render, ..PipelineConfig::default() };
        let b = PipelineConfig { variant: PipelineVariant::B, ..a };
        let la = pipeline_latency(&a, &s, &g, idx).unwrap();
        let lb = pipeline_latency(&b, &s, &g, idx).unwrap();
        prop_assert!((la.total_ms + sor - lb.total_ms).abs() < 1e-9);
        prop_assert!((lb.total_ms - (lb.sor_ms + lb.pscr_ms + lb.e_ms)).abs() < 1e-12);
        prop_assert_eq!(la.sor_ms, 0.0);
    }

    #[test]
    fn lofap_permutation_and_shift(mut lat in proptest::collection::vec(0.0f64..200.0, 1..8), shift in 0.0f64..100.0, thr in 0.0f64..40.0) {
        let base = lofap_select(&lat, thr).unwrap();
        lat.reverse();
        prop_assert_eq!(lofap_select(&lat, thr).unwrap(), base);
        let shifted: Vec<f64> = lat.iter().map(|l| l + shift).collect();
        let s = lofap_select(&shifted, thr).unwrap();
        prop_assert!((s.selected_ms - base.selected_ms - shift).abs() < 1e-9);
        let spread = lat.iter().cloned().fold(f64::MIN, f64::max) - base.selected_ms;
        // spreads within rounding of the threshold may flip
        if (spread - thr).abs() > 1e-9 {
            prop_assert_eq!(s.multipass_detected, base.multipass_detected);
        }
    }

    #[test]
    fn single_pass_never_multipass(n in 2usize..6, k in 0usize..36) {
        let s = screen(60.0);
        let g = StimulusMatrix::new(6, 6, 150.0, 250.0, 100.0, 200.0).unwrap();
        let mut p = PipelineConfig::default();
        p.render.n_cameras = n;
        p.render.single_pass = true;
        let lat = camera_latencies(&p, &s, &g, g.cell(k)).unwrap();
        prop_assert!(!lofap_select(&lat, default_multipass_threshold(&s)).unwrap().multipass_detected);
    }
}

#[test]
fn multipass_at_sixty_hz_is_detected() {
    let s = screen(60.0);
    let g = StimulusMatrix::new(6, 6, 150.0, 250.0, 100.0, 200.0).unwrap();
    let mut p = PipelineConfig::default();
    p.render.n_cameras = 2;
    let lat = camera_latencies(&p, &s, &g, GridIndex::new(0, 0)).unwrap();
    let sel = lofap_select(&lat, default_multipass_threshold(&s)).unwrap();
    assert_eq!(sel.selected_ms, lat[0]);
    assert!(sel.multipass_detected);
}
