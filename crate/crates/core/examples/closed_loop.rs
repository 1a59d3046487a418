// One 10 min run of the reference scenario.
//
//     cargo run --release --example closed_loop

use hess::{compute_metrics, run_simulation, RunMetrics, SimConfig};

pub fn run_example() -> hess::Result<()> {
    let config = SimConfig::default();
    let run = run_simulation(&config)?;
    let m = compute_metrics(&run)?;
    for (name, v) in RunMetrics::COLUMNS.iter().zip(m.values()) {
        println!("{name:>18} {v:.6}");
    }

    // Bookkeeping holds at every step.
    let worst = (0..run.len())
        .map(|k| (run.p_grid[k] + run.p_ess[k] + run.p_sc[k] - run.p_dc[k]).abs())
        .fold(0.0, f64::max);
    println!("max |p_grid + p_ess + p_sc - p_dc| = {worst:e} MW");
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
