// Open-loop frequency responses of the two device loops.
//
//     cargo run --example bode_controllers

use hess::analysis::{bode_eval, log_grid};
use hess::control::{EssControllerParams, ScControllerParams};

pub fn run_example() -> hess::Result<()> {
    let freqs = log_grid(1e-3, 10.0, 50);
    let sc = bode_eval(&ScControllerParams::default().open_loop_tf(), &freqs)?;
    let ess_params = EssControllerParams::default();
    let ess = bode_eval(&ess_params.open_loop_tf(), &freqs)?;
    let ess_plain = bode_eval(
        &EssControllerParams {
            repetitive: false,
            ..ess_params
        }
        .open_loop_tf(),
        &freqs,
    )?;

    println!("   f Hz      SC dB    BESS dB  BESS no-RC dB");
    for f in [0.001, 0.01, 0.05, 0.2, 1.0, 5.0] {
        println!(
            "{f:7.3} {:10.2} {:10.2} {:10.2}",
            sc.magnitude_near(f),
            ess.magnitude_near(f),
            ess_plain.magnitude_near(f)
        );
    }
    for i in ess.local_maxima() {
        println!("BESS local maximum at {:.4} Hz", freqs[i]);
    }
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
