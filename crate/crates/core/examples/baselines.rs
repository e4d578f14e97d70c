//! Wheel odometry and single-IMU strapdown integration on one recording.

use wichins::baselines::{run_chassis_ins, run_odometry, run_wheel_ins, InitialAttitude, WheelInsOptions};
use wichins::eval::{evaluate, Method};
use wichins::sim::{scenarios, simulate};
use wichins::VehicleConfig;

fn main() -> wichins::Result<()> {
    let rec = simulate(&scenarios::noisy(scenarios::circle(), 2))?.recording;
    let config = VehicleConfig::from_recording(&rec);

    let odo = run_odometry(&rec, &config)?;
    let wmi = run_wheel_ins(&rec, &config, &WheelInsOptions::default())?;
    let cmi = run_chassis_ins(&rec, &config, InitialAttitude::default());

    for (method, sol) in [(Method::Odometry, odo), (Method::WheelIns, wmi), (Method::ChassisIns, cmi)] {
        let (row, _) = evaluate("circle", method, &sol, &rec.ground_truth)?;
        println!("{:>4}: position RMSE {:10.2} m, drift {:8.2} % of distance", method.name(), row.prmse, row.tde);
    }
    Ok(())
}
