// Device plant: first-order lag, rate and power clamps, SoC bookkeeping.
//
//     cargo run --example device_limits

use hess::plant::{device_step, soc_update, DeviceParams, DeviceState};

pub fn run_example() -> hess::Result<()> {
    let dt = 0.01;

    let sc = DeviceParams::sc();
    let mut s = DeviceState::at_rest(0.5);
    for k in 1..=30 {
        s = device_step(s, &sc, 50.0, dt)?;
        if k <= 3 || k % 10 == 0 {
            println!("sc   step {k:2}: {:6.3} MW", s.power);
        }
    }

    let bess = DeviceParams::bess();
    let mut b = DeviceState::at_rest(0.5);
    for k in 1..=300 {
        b = device_step(b, &bess, 30.0, dt)?;
        if k % 50 == 0 {
            println!("bess step {k:3}: {:6.3} MW", b.power);
        }
    }

    // 1 MWh in then out at 97 % each way.
    let p = DeviceParams {
        capacity: 10.0,
        ..bess
    };
    let charged = soc_update(0.5, -1.0, &p, 3600.0);
    let back = soc_update(charged, 1.0 * 0.97 * 0.97, &p, 3600.0);
    println!("soc after charge {charged:.4}, after discharging eta^2 of it {back:.4}");
    Ok(())
}

fn main() -> hess::Result<()> {
    run_example()
}
