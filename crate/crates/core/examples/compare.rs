// Same demand with and without storage.
//
//     cargo run --release --example compare

use hess::{compute_metrics, run_comparison, SimConfig};

pub fn run_example() -> hess::Result<()> {
    let (with, without) = run_comparison(&SimConfig::default())?;
    let a = compute_metrics(&with)?;
    let b = compute_metrics(&without)?;
    println!("                    with HESS   without");
    println!(
        "freq dev max  Hz  {:10.4} {:9.4}",
        a.freq_dev_max, b.freq_dev_max
    );
    println!(
        "freq dev rms  Hz  {:10.4} {:9.4}",
        a.freq_dev_rms, b.freq_dev_rms
    );
    println!(
        "grid power std MW {:10.3} {:9.3}",
        a.grid_power_std, b.grid_power_std
    );
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
