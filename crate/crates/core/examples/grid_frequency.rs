// Frequency response of the single-machine grid to a 50 MW load step.
//
//     cargo run --example grid_frequency

use hess::plant::{grid_step, GridParams, GridState};

pub fn run_example() -> hess::Result<()> {
    let g = GridParams::default();
    let dt = 0.01;
    let mut s = GridState::default();
    let mut nadir = g.nominal_freq;
    for k in 1..=3000 {
        s = grid_step(s, &g, 50.0, 0.0, dt);
        let f = g.freq_hz(&s);
        nadir = nadir.min(f);
        if k % 500 == 0 {
            println!("t={:4.1} s  f={f:.4} Hz", k as f64 * dt);
        }
    }
    let steady = g.nominal_freq * (1.0 - 0.05 / (g.damping_d + 1.0 / g.droop_r));
    println!("nadir {nadir:.4} Hz, analytic steady state {steady:.4} Hz");
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
