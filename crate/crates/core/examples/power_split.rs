// High-pass split of the demand deviation between SC and BESS.
//
//     cargo run --example power_split

use hess::analysis::{default_segment_length, psd_welch};
use hess::command::{hpf_step, HpfState};
use hess::signals::{delta_signal, generate_load, LoadProfileSpec};

pub fn run_example() -> hess::Result<()> {
    let spec = LoadProfileSpec::default();
    let trace = generate_load(&spec)?;
    let delta = delta_signal(&trace, 45.0);

    let mut hpf = HpfState::settled(0.2, delta.samples[0]);
    let (mut high, mut low) = (Vec::new(), Vec::new());
    let mut worst: f64 = 0.0;
    for &d in &delta.samples {
        let (next, h, l) = hpf_step(&hpf, d, delta.dt);
        hpf = next;
        worst = worst.max((h + l - d).abs());
        high.push(h);
        low.push(l);
    }
    println!("max |high + low - delta| = {worst:e} MW");

    let seg = default_segment_length(high.len());
    let sc = psd_welch(&high, delta.dt, seg, 0.5)?;
    let ess = psd_welch(&low, delta.dt, seg, 0.5)?;
    let nyq = 0.5 / delta.dt + 1.0;
    let df = ess.resolution();
    println!(
        "SC share above 0.2 Hz: {:.1} %",
        100.0 * sc.band_power(0.2, nyq) / sc.total_power()
    );
    println!(
        "BESS share below 0.2 Hz (DC excluded): {:.1} %",
        100.0 * ess.band_power(df / 2.0, 0.2) / ess.band_power(df / 2.0, nyq)
    );
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
