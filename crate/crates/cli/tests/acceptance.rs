//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p taglat-cli --test acceptance`.

use std::process::Command;
use std::time::{Duration, Instant};

use taglat_cli::config::RunConfig;
use taglat_cli::report::build_report;
use taglat_core::display::cell_height;
use taglat_core::montecarlo::dist_curve_with;
use taglat_core::trace::synthesize_trace_with_latencies;
use taglat_core::{
    analyze_trace, delta_latency, jitter_attenuation, lofap_select, run_mc, scr, synthesize_trace,
    AnalysisParams, Execution, GridPoint, McConfig, Orientation, Sampler, ScreenModel,
    StimulusMatrix, SynthParams,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn screen_60() -> ScreenModel {
    ScreenModel::new(60.0, 16.0, 6.0, 1000.0, 1000.0, Orientation::Normal).unwrap()
}

fn grid_6x6() -> StimulusMatrix {
    StimulusMatrix::new(6, 6, 160.0, 160.0, 100.0, 100.0).unwrap()
}

fn lofap() -> Outcome {
    let sel = lofap_select(&[117.0, 143.0], 20.0).map_err(|e| e.to_string())?;
    ensure(
        sel.selected_ms == 117.0,
        format!("selected {}", sel.selected_ms),
    )?;
    ensure(sel.multipass_detected, "multipass not flagged")?;
    Ok("selected 117 ms, multipass flagged (26 > 20)".into())
}

fn scr_model() -> Outcome {
    let s = screen_60();
    let vals: Vec<f64> = [0.0, 0.5, 1.0]
        .iter()
        .map(|&h| scr(&s, h).unwrap())
        .collect();
    ensure(vals == [6.0, 14.0, 22.0], format!("scr = {vals:?}"))?;
    let m = grid_6x6();
    let mut worst = 0.0f64;
    for a in m.cells() {
        for b in m.cells() {
            let composed = (scr(&s, cell_height(&m, &s, a).unwrap()).unwrap()
                - scr(&s, cell_height(&m, &s, b).unwrap()).unwrap())
            .abs();
            let d = delta_latency(&m, &s, a, b).map_err(|e| e.to_string())?;
            worst = worst.max((d - composed).abs());
        }
    }
    ensure(worst <= 1e-9, format!("max delta error {worst:e}"))?;
    Ok(format!(
        "scr 6/14/22 ms, 36x36 delta max error {worst:.1e} ms"
    ))
}

fn event_times(n: usize) -> Vec<f64> {
    (0..n).map(|k| 300.0 + 500.0 * k as f64).collect()
}

fn synth_params(seed: u64) -> SynthParams {
    SynthParams {
        noise_sd: 0.05,
        drift_amplitude: 0.5,
        seed,
        ..SynthParams::default()
    }
}

fn closed_loop() -> Outcome {
    let mut parts = Vec::new();
    for (mean, sd, seed) in [(38.0, 5.3, 1u64), (117.0, 5.8, 2)] {
        let rec = synthesize_trace(&event_times(100), mean, sd, &synth_params(seed))
            .map_err(|e| e.to_string())?;
        let est = analyze_trace(&rec, &AnalysisParams::default())
            .map_err(|e| e.to_string())?
            .estimate;
        ensure(est.n_events == 100, format!("{} events", est.n_events))?;
        ensure(
            (est.mean_ms - mean).abs() <= 1.5 && (est.sd_ms - sd).abs() <= 1.5,
            format!(
                "N({mean},{sd}) recovered as {:.3}/{:.3}",
                est.mean_ms, est.sd_ms
            ),
        )?;
        parts.push(format!(
            "N({mean},{sd}) -> {:.2}/{:.2}",
            est.mean_ms, est.sd_ms
        ));
    }
    Ok(parts.join(", "))
}

fn bimodality() -> Outcome {
    let lat: Vec<f64> = (0..100)
        .map(|k| if k % 2 == 0 { 117.0 } else { 143.0 })
        .collect();
    let rec = synthesize_trace_with_latencies(&event_times(100), &lat, &synth_params(4))
        .map_err(|e| e.to_string())?;
    let a = analyze_trace(&rec, &AnalysisParams::default()).map_err(|e| e.to_string())?;
    let b = a.bimodality.ok_or("117/143 trace not flagged")?;
    let rec = synthesize_trace(&event_times(100), 38.0, 5.3, &synth_params(5))
        .map_err(|e| e.to_string())?;
    let u = analyze_trace(&rec, &AnalysisParams::default()).map_err(|e| e.to_string())?;
    ensure(u.bimodality.is_none(), "unimodal 38 ms trace flagged")?;
    Ok(format!(
        "117/143 flagged ({:.1} vs {:.1} ms), 38 ms not flagged",
        b.low_mean_ms, b.high_mean_ms
    ))
}

fn monte_carlo() -> Outcome {
    let (m, s) = (grid_6x6(), screen_60());
    let centre = GridPoint { i: 2.5, j: 2.5 };
    let base = McConfig {
        seed: 2024,
        ..McConfig::new(m, s, centre)
    };

    let exhaustive = run_mc(&McConfig {
        n_stimuli: 36,
        sampler: Sampler::WithoutReplacement,
        ..base.clone()
    })
    .map_err(|e| e.to_string())?;
    let sds = [
        exhaustive.signed.sd_row,
        exhaustive.signed.sd_col,
        exhaustive.sd_row_dist,
        exhaustive.sd_col_dist,
        exhaustive.sd_latency_ms,
    ];
    ensure(
        sds.iter().all(|&v| v == 0.0),
        format!("exhaustive SDs {sds:?}"),
    )?;

    let curve =
        dist_curve_with(&base, &[12, 48], Execution::Parallel).map_err(|e| e.to_string())?;
    let ratio = curve[0].result.signed.sd_row / curve[1].result.signed.sd_row;
    ensure((ratio - 2.0).abs() <= 0.2, format!("SD ratio {ratio:.4}"))?;
    let mean = curve[0].result.mean_row_dist;
    ensure(
        (mean - 0.39).abs() <= 0.02,
        format!("mean row distance {mean:.4}"),
    )?;
    Ok(format!(
        "(a) exhaustive SD 0, (b) SD ratio n12/n48 {ratio:.3}, (c) mean row distance {mean:.4}"
    ))
}

fn attenuation() -> Outcome {
    let a = jitter_attenuation(20.0, 20.0, 10_000, 1000.0, 7).map_err(|e| e.to_string())?;
    ensure((a - 0.707).abs() <= 0.02, format!("attenuation {a:.4}"))?;
    Ok(format!("attenuation {a:.4} (analytic 0.7071)"))
}

const CONFIG_60: &str = "\
screen.refresh_rate_hz = 60
screen.default_timing = true
screen.width_px = 1000
screen.height_px = 1000
matrix.rows = 6
matrix.cols = 6
matrix.pitch_ui_px = 160
matrix.pitch_uj_px = 160
matrix.margin_mi_px = 100
matrix.margin_mj_px = 100
";

fn report_bound() -> Outcome {
    let slow = build_report(&RunConfig::parse(CONFIG_60).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let fast_cfg = CONFIG_60.replace("refresh_rate_hz = 60", "refresh_rate_hz = 140");
    let fast = build_report(&RunConfig::parse(&fast_cfg).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let b = slow.bound;
    ensure(
        b.bound_scan_ms == 44.0,
        format!("2(a+b) = {}", b.bound_scan_ms),
    )?;
    ensure(
        b.bound_refresh_ms == 40.0,
        format!("full-refresh bound {}", b.bound_refresh_ms),
    )?;
    ensure(
        fast.bound.bound_scan_ms < b.bound_scan_ms
            && fast.bound.bound_refresh_ms < b.bound_refresh_ms,
        format!(
            "140 Hz bounds {}/{} not below 60 Hz",
            fast.bound.bound_scan_ms, fast.bound.bound_refresh_ms
        ),
    )?;
    let text = taglat_cli::report::render(&slow);
    ensure(
        text.contains("uncertainty_bound_ms: 44.000"),
        "44 ms missing from report",
    )?;
    ensure(
        text.contains("uncertainty_bound_full_refresh_ms: 40.000"),
        "40 ms missing from report",
    )?;
    Ok(format!(
        "60 Hz: 44 / 40 ms; 140 Hz: {:.3} / {:.3} ms",
        fast.bound.bound_scan_ms, fast.bound.bound_refresh_ms
    ))
}

fn run(args: &[&str]) -> Result<(Vec<u8>, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_taglat"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok((out.stdout, out.stderr))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let cfg = path("run.cfg");
    std::fs::write(&cfg, format!("{CONFIG_60}mc.n_stimuli = 4,12,48\n")).unwrap();
    let mut epochs = String::from("epoch,sample,value\n");
    for e in 0..3 {
        for k in 0..50 {
            epochs.push_str(&format!("{e},{k},{}\n", ((k * 7 + e) % 11) as f64 * 0.25));
        }
    }
    let epochs_path = path("epochs.csv");
    std::fs::write(&epochs_path, epochs).unwrap();

    let mut checked = 0;
    for round in ["a", "b"] {
        let trace = path(&format!("trace_{round}.csv"));
        run(&[
            "--seed",
            "9",
            "--out",
            &trace,
            "synthesize",
            "--events",
            "30",
            "--noise-sd",
            "0.05",
            "--drift",
            "0.5",
        ])?;
    }
    let ta = std::fs::read(path("trace_a.csv")).unwrap();
    let tb = std::fs::read(path("trace_b.csv")).unwrap();
    ensure(ta == tb, "synthesize output differs between runs")?;
    checked += 1;

    let trace = path("trace_a.csv");
    let commands: Vec<Vec<&str>> = vec![
        vec!["--config", &cfg, "model"],
        vec!["--config", &cfg, "--seed", "3", "montecarlo"],
        vec!["--config", &cfg, "--seed", "3", "montecarlo", "--signed"],
        vec!["analyze", &trace],
        vec!["correct", &epochs_path, "--offset-ms", "-3"],
        vec!["--config", &cfg, "report"],
    ];
    for args in &commands {
        let first = run(args)?;
        let second = run(args)?;
        ensure(
            first == second,
            format!("{args:?} output differs between runs"),
        )?;
        checked += 1;
    }
    for signed in [false, true] {
        let mut par = vec!["--config", cfg.as_str(), "--seed", "3", "montecarlo"];
        if signed {
            par.push("--signed");
        }
        let mut ser = par.clone();
        ser.push("--serial");
        ensure(
            run(&par)?.0 == run(&ser)?.0,
            "serial and parallel Monte Carlo differ",
        )?;
        checked += 1;
    }
    Ok(format!("{checked} command comparisons byte-identical"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("AC1", "LOFAP decision", Duration::from_secs(1), lofap),
        (
            "AC2",
            "screen rendering arithmetic",
            Duration::from_secs(1),
            scr_model,
        ),
        (
            "AC3",
            "closed-loop latency recovery",
            Duration::from_secs(5),
            closed_loop,
        ),
        (
            "AC4",
            "bimodality detection",
            Duration::from_secs(5),
            bimodality,
        ),
        (
            "AC5",
            "Monte Carlo properties",
            Duration::from_secs(10),
            monte_carlo,
        ),
        (
            "AC6",
            "jitter attenuation",
            Duration::from_secs(5),
            attenuation,
        ),
        (
            "AC7",
            "report uncertainty bound",
            Duration::from_secs(1),
            report_bound,
        ),
        ("AC8", "determinism", Duration::from_secs(30), determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; took longer than {budget:?}")),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {id} {name}: {detail} [{:.3} s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
