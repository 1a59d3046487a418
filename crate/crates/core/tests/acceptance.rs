//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use hess::analysis::{bode_eval, compute_metrics, default_segment_length, log_grid, psd_welch};
use hess::command::{hpf_step, HpfState};
use hess::config::load_config;
use hess::csvio::write_run_to;
use hess::engine::{run_comparison, run_simulation, RunResult, SimConfig};
use hess::estimation::{kf_step, KfParams, KfState};
use hess::plant::{device_step, grid_step, DeviceParams, DeviceState, GridParams, GridState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: f64 = 0.01;

fn scenario(name: &str) -> SimConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name);
    load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn complementary_split() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut state = HpfState::new(0.2);
    let mut worst: f64 = 0.0;
    for _ in 0..6000 {
        let delta = rng.random_range(-50.0..50.0);
        let (next, high, low) = hpf_step(&state, delta, DT);
        state = next;
        worst = worst.max((high + low - delta).abs());
    }
    check(
        worst <= 1e-9,
        format!("max |high + low - delta| = {worst:.3e} MW"),
    )
}

fn plant_oracle() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, base) in [("sc", DeviceParams::sc()), ("bess", DeviceParams::bess())] {
        let params = DeviceParams {
            capacity: 1e9,
            ..base
        };
        let mut state = DeviceState {
            power: 0.5,
            soc: 0.5,
        };
        let mut seg_start = state.power;
        let mut worst: f64 = 0.0;
        for u in [1.0, 3.0, 2.0, 4.0] {
            for j in 1..=2500 {
                state = device_step(state, &params, u, DT).unwrap();
                let t = j as f64 * DT;
                let exact = u + (seg_start - u) * (-t / params.tau).exp();
                worst = worst.max(((state.power - exact) / exact).abs());
            }
            seg_start = u + (seg_start - u) * (-2500.0 * DT / params.tau).exp();
        }
        ok &= worst <= 1e-12;
        notes.push(format!("{name} zoh rel err {worst:.2e}"));
    }

    // SC saturates at 10 MW and moves at most 1 MW per step.
    let sc = DeviceParams::sc();
    let mut s = DeviceState::at_rest(0.5);
    let mut max_step: f64 = 0.0;
    for _ in 0..1000 {
        let next = device_step(s, &sc, 50.0, DT).unwrap();
        max_step = max_step.max((next.power - s.power).abs());
        s = next;
    }
    let sc_ok = (s.power - 10.0).abs() < 1e-12 && max_step <= 1.0 + 1e-12;
    ok &= sc_ok;
    notes.push(format!("sc p={:.3} max dp={max_step:.3}", s.power));

    // BESS saturates at 30 MW, never faster than 0.15 MW per step.
    let bess = DeviceParams::bess();
    let mut s = DeviceState::at_rest(0.5);
    let mut max_step: f64 = 0.0;
    for k in 0..5000 {
        let u = if k < 3000 { 200.0 } else { -200.0 };
        let next = device_step(s, &bess, u, DT).unwrap();
        max_step = max_step.max((next.power - s.power).abs());
        s = next;
        ok &= s.power.abs() <= 30.0 + 1e-12;
    }
    let bess_ok = max_step <= 0.15 + 1e-12 && (s.power + 30.0).abs() < 1e-12;
    ok &= bess_ok;
    notes.push(format!("bess max dp={max_step:.4}"));

    // SoC feasibility: a nearly empty SC stops exactly at soc_min.
    let tiny = DeviceParams {
        capacity: 1e-3,
        ..DeviceParams::sc()
    };
    let mut s = DeviceState {
        power: 0.0,
        soc: tiny.soc_min + 1e-4,
    };
    for _ in 0..200 {
        s = device_step(s, &tiny, 10.0, DT).unwrap();
        ok &= s.soc >= tiny.soc_min;
    }
    let floor_ok = (s.soc - tiny.soc_min).abs() < 1e-12 && s.power.abs() < 1e-9;
    ok &= floor_ok;
    notes.push(format!("soc floor {:.6} p={:.2e}", s.soc, s.power));
    check(ok, notes.join("; "))
}

fn swing_oracle() -> Outcome {
    let g = GridParams::default();
    let dp = 0.05;
    let p_load = g.base_power * dp;
    let first = grid_step(GridState::default(), &g, p_load, 0.0, DT);
    let slope = first.freq_dev / DT;
    let slope_ref = -dp / (2.0 * g.inertia_h);
    let mut s = GridState::default();
    for _ in 0..20_000 {
        s = grid_step(s, &g, p_load, 0.0, DT);
    }
    let ss_ref = -dp / (g.damping_d + 1.0 / g.droop_r);
    let e1 = (slope / slope_ref - 1.0).abs();
    let e2 = (s.freq_dev / ss_ref - 1.0).abs();
    check(
        e1 <= 0.005 && e2 <= 0.005,
        format!(
            "slope {slope:.4e} vs {slope_ref:.4e} ({:.3}%), steady {:.4e} vs {ss_ref:.4e} ({:.3}%)",
            e1 * 100.0,
            s.freq_dev,
            e2 * 100.0
        ),
    )
}

/// Least-squares slope of the last `n` samples.
fn ls_slope(y: &[f64], dt: f64, n: usize) -> f64 {
    let y = &y[y.len() - n..];
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let tm = t.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let num: f64 = t.iter().zip(y).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let den: f64 = t.iter().map(|t| (t - tm).powi(2)).sum();
    num / den
}

fn kf_ramp() -> Outcome {
    let params = KfParams::default();
    let mut worst: f64 = 0.0;
    for slope in [5.0, 10.0, 20.0, 50.0, 100.0] {
        let mut state = KfState::new(0.0);
        let mut ys = Vec::new();
        let mut ramp = 0.0;
        for k in 0..3000 {
            let y = slope * k as f64 * DT;
            ys.push(y);
            ramp = kf_step(&state, &params, y)
                .map(|(s, r)| {
                    state = s;
                    r
                })
                .unwrap();
        }
        let oracle = ls_slope(&ys, DT, 100);
        worst = worst.max((ramp - oracle).abs() / oracle.abs());
    }
    check(
        worst <= 0.02,
        format!(
            "worst relative error {:.3}% over 5..100 MW/s",
            worst * 100.0
        ),
    )
}

fn band_separation() -> Outcome {
    let run = run_simulation(&scenario("reference.conf")).unwrap();
    let seg = default_segment_length(run.len());
    let ess = psd_welch(&run.p_ess_ref, DT, seg, 0.5).unwrap();
    let sc = psd_welch(&run.p_sc_ref, DT, seg, 0.5).unwrap();
    let df = ess.resolution();
    let nyq = 0.5 / DT;
    let ess_low = ess.band_power(df / 2.0, 0.2) / ess.band_power(df / 2.0, nyq + df);
    let sc_high = sc.band_power(0.2, nyq + df) / sc.total_power();
    check(
        ess_low >= 0.8 && sc_high >= 0.8,
        format!(
            "BESS share below 0.2 Hz {:.1}%, SC share above 0.2 Hz {:.1}%",
            ess_low * 100.0,
            sc_high * 100.0
        ),
    )
}

fn bode_properties() -> Outcome {
    let cfg = SimConfig::default();
    let freqs = log_grid(1e-3, 10.0, 50);
    let sc = bode_eval(&cfg.sc_controller.open_loop_tf(), &freqs).unwrap();
    let ess = bode_eval(&cfg.ess_controller.open_loop_tf(), &freqs).unwrap();
    let sc_drop = sc.magnitude_near(1.0) - sc.magnitude_near(0.01);
    let ess_dom = ess.magnitude_near(0.01) - ess.magnitude_near(1.0);
    let nearest = freqs
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 0.05).abs().total_cmp(&(b.1 - 0.05).abs()))
        .unwrap()
        .0;
    let peak = ess
        .local_maxima()
        .into_iter()
        .find(|&i| i.abs_diff(nearest) <= 1);
    check(
        sc_drop >= 20.0 && ess_dom > 0.0 && peak.is_some(),
        format!(
            "SC 1 Hz over 0.01 Hz {sc_drop:.1} dB, BESS 0.01 Hz over 1 Hz {ess_dom:.1} dB, RC peak at {}",
            peak.map_or("none".into(), |i| format!("{:.4} Hz", freqs[i]))
        ),
    )
}

fn smoothing() -> Outcome {
    let (with, without) = run_comparison(&scenario("reference.conf")).unwrap();
    let a = compute_metrics(&with).unwrap();
    let b = compute_metrics(&without).unwrap();
    let rf = a.freq_dev_rms / b.freq_dev_rms;
    let rp = a.grid_power_std / b.grid_power_std;
    check(
        rf <= 0.5 && rp <= 0.5,
        format!("freq rms ratio {:.3}, grid power std ratio {:.3}", rf, rp),
    )
}

fn soc_short() -> Outcome {
    let cfg = scenario("reference.conf");
    assert!(!cfg.toggles.soc_manager_enabled);
    let m = compute_metrics(&run_simulation(&cfg).unwrap()).unwrap();
    check(
        m.soc_excursion_ess <= 3e-4 && m.soc_excursion_sc <= 3e-4,
        format!(
            "BESS {:.4}%, SC {:.4}% (capacities {} / {} MWh)",
            m.soc_excursion_ess * 100.0,
            m.soc_excursion_sc * 100.0,
            cfg.bess.capacity,
            cfg.sc.capacity
        ),
    )
}

fn outside_ramps_max_dev(run: &RunResult, cfg: &SimConfig, settle: f64) -> f64 {
    let windows = cfg.load.ramp_windows();
    run.time
        .iter()
        .zip(&run.freq_hz)
        .filter(|(t, _)| !windows.iter().any(|(a, b)| **t >= *a && **t <= b + settle))
        .map(|(_, f)| (f - cfg.grid.nominal_freq).abs())
        .fold(0.0, f64::max)
}

fn soc_long() -> Outcome {
    let cfg = scenario("long_horizon.conf");
    assert!(cfg.toggles.soc_manager_enabled && cfg.toggles.baseline_correction_enabled);
    let mut off = cfg.clone();
    off.toggles.soc_manager_enabled = false;
    let (on_run, off_run) = std::thread::scope(|s| {
        let a = s.spawn(|| run_simulation(&cfg).unwrap());
        let b = s.spawn(|| run_simulation(&off).unwrap());
        (a.join().unwrap(), b.join().unwrap())
    });
    let m = compute_metrics(&on_run).unwrap();
    let end = |r: &RunResult| {
        (
            (r.soc_ess.last().unwrap() - cfg.bess.soc_target).abs(),
            (r.soc_sc.last().unwrap() - cfg.sc.soc_target).abs(),
        )
    };
    let (on_e, on_s) = end(&on_run);
    let (off_e, off_s) = end(&off_run);
    let fdev = outside_ramps_max_dev(&on_run, &cfg, 5.0);
    check(
        m.soc_excursion_ess <= 5e-4
            && m.soc_excursion_sc <= 5e-4
            && on_e < off_e
            && on_s < off_s
            && fdev <= 0.05,
        format!(
            "excursion BESS {:.4}% SC {:.4}%; terminal error BESS {on_e:.2e} vs {off_e:.2e}, SC {on_s:.2e} vs {off_s:.2e}; max |f - 60| outside ramps {fdev:.4} Hz",
            m.soc_excursion_ess * 100.0,
            m.soc_excursion_sc * 100.0
        ),
    )
}

fn determinism() -> Outcome {
    let mut ok = true;
    let mut sizes = Vec::new();
    for name in ["reference.conf", "long_horizon.conf"] {
        let cfg = scenario(name);
        let csv = || {
            let mut buf = Vec::new();
            write_run_to(&run_simulation(&cfg).unwrap(), &mut buf).unwrap();
            buf
        };
        let (a, b) = std::thread::scope(|s| {
            let a = s.spawn(csv);
            let b = s.spawn(csv);
            (a.join().unwrap(), b.join().unwrap())
        });
        ok &= a == b;
        sizes.push(format!("{name} {} bytes", a.len()));
    }
    check(ok, format!("identical CSV output: {}", sizes.join(", ")))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "complementary split identity",
            Duration::from_secs(1),
            complementary_split,
        ),
        (
            "plant analytic oracle and clamps",
            Duration::from_secs(1),
            plant_oracle,
        ),
        (
            "swing equation oracle",
            Duration::from_secs(1),
            swing_oracle,
        ),
        ("KF ramp tracking", Duration::from_secs(5), kf_ramp),
        (
            "frequency band separation",
            Duration::from_secs(10),
            band_separation,
        ),
        ("Bode properties", Duration::from_secs(1), bode_properties),
        ("closed-loop smoothing", Duration::from_secs(60), smoothing),
        (
            "SoC sustainability, short run",
            Duration::from_secs(60),
            soc_short,
        ),
        (
            "SoC sustainability, long run",
            Duration::from_secs(300),
            soc_long,
        ),
        ("determinism", Duration::from_secs(300), determinism),
    ];
    let mut failures = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let ok = outcome.ok && elapsed <= budget;
        if !ok {
            failures += 1;
        }
        println!(
            "{} {name}: {} [{:.2} s, budget {} s]",
            if ok { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", 10 - failures, 10);
    if failures > 0 {
        std::process::exit(1);
    }
}
