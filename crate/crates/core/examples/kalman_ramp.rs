// Ramp-rate estimation and the adaptive weight it drives.
//
//     cargo run --example kalman_ramp

use hess::estimation::{adaptive_weight, kf_step, KfParams, KfState, RampWeightParams};

pub fn run_example() -> hess::Result<()> {
    let kf = KfParams::default();
    let weights = RampWeightParams::default();
    let dt = kf.dt;

    // 2 s of flat, a 25 MW/s ramp for 2 s, then flat again.
    let mut state = KfState::new(0.0);
    for k in 0..600 {
        let t = k as f64 * dt;
        let y = 25.0 * (t - 2.0).clamp(0.0, 2.0);
        let (next, ramp) = kf_step(&state, &kf, y)?;
        state = next;
        if k % 50 == 0 {
            let w = adaptive_weight(ramp, &weights);
            println!(
                "t={t:4.1} s  y={y:5.1}  ramp={ramp:6.2} MW/s  omega={:.3}",
                w.omega_ramp
            );
        }
    }
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
