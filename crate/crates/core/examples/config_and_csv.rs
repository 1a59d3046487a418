// Scenario text in, CSV out.
//
//     cargo run --example config_and_csv

use hess::config::{parse_str, render_config};
use hess::csvio::write_run_to;
use hess::run_simulation;

const SCENARIO: &str = "
[sim]
duration = 5
[load]
schedule = idle:2, active:3
noise_std = 0
[toggles]
ramp_term_enabled = false
";

pub fn run_example() -> hess::Result<()> {
    let config = parse_str(SCENARIO)?;
    println!(
        "{}",
        render_config(&config)
            .lines()
            .take(6)
            .collect::<Vec<_>>()
            .join("\n")
    );

    let run = run_simulation(&config)?;
    let mut buf = Vec::new();
    write_run_to(&run, &mut buf)?;
    let text = String::from_utf8(buf).expect("csv is utf-8");
    for line in text.lines().take(3) {
        println!("{line}");
    }

    match parse_str("[bess]\ntau = -1\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
