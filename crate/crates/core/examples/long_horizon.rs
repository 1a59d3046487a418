// Long training cycles with baseline correction and the SoC manager,
// against the same run with the manager off.
//
//     cargo run --release --example long_horizon

use hess::config::load_config;
use hess::{compute_metrics, run_simulation};

pub fn run_example() -> hess::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/long_horizon.conf");
    let on = load_config(path)?;
    let mut off = on.clone();
    off.toggles.soc_manager_enabled = false;

    for (label, cfg) in [("manager on ", &on), ("manager off", &off)] {
        let run = run_simulation(cfg)?;
        let m = compute_metrics(&run)?;
        println!(
            "{label}: soc p2p bess {:.5} sc {:.5}, final error bess {:+.2e} sc {:+.2e}",
            m.soc_excursion_ess,
            m.soc_excursion_sc,
            run.soc_ess.last().unwrap() - cfg.bess.soc_target,
            run.soc_sc.last().unwrap() - cfg.sc.soc_target,
        );
    }
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
