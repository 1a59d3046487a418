// Synthetic training-cycle demand and its spectrum.
//
//     cargo run --example gen_load

use hess::analysis::{default_segment_length, psd_welch};
use hess::signals::{delta_signal, generate_load, LoadProfileSpec, Phase};

pub fn run_example() -> hess::Result<()> {
    let spec = LoadProfileSpec::default();
    let trace = generate_load(&spec)?;
    let (lo, hi) = trace
        .samples
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    println!(
        "{} samples over {} s, {lo:.1}..{hi:.1} MW",
        trace.len(),
        spec.total_duration()
    );

    // Spectrum of the plateau only; ramps would smear the low bins.
    let active: Vec<f64> = (0..trace.len())
        .filter(|&k| {
            let t = trace.time(k);
            spec.phase_at(t) == Phase::Active
                && !spec.ramp_windows().iter().any(|&(a, b)| t >= a && t <= b)
        })
        .map(|k| trace.samples[k])
        .collect();
    let delta = delta_signal(
        &hess::LoadTrace {
            t0: 0.0,
            dt: trace.dt,
            samples: active,
        },
        spec.peak_power,
    );
    let psd = psd_welch(
        &delta.samples,
        trace.dt,
        default_segment_length(delta.samples.len()),
        0.5,
    )?;
    for &i in psd.peaks().iter().take(2) {
        println!(
            "peak at {:.3} Hz, {:.1} MW^2/Hz",
            psd.freqs[i], psd.density[i]
        );
    }
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
