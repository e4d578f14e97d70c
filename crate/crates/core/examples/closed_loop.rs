//! Full estimator on the urban drive in both wheel configurations.

use wichins::dataset::{calibrate, CalibrationConfig};
use wichins::eval::{evaluate, Method};
use wichins::pipeline::VelocityUpdateWheels;
use wichins::sim::{scenarios, simulate};
use wichins::{run_wichins, Mode, PipelineOptions, VehicleConfig};

fn main() -> wichins::Result<()> {
    let raw = simulate(&scenarios::noisy(scenarios::urban_loop(), 5))?.recording;
    let rec = calibrate(&raw, &CalibrationConfig::default())?.apply(&raw);
    let config = VehicleConfig::from_recording(&rec);

    let runs = [
        ("two wheels", Mode::TwoWheel, VelocityUpdateWheels::All),
        ("four wheels", Mode::FourWheel, VelocityUpdateWheels::All),
        ("four wheels, fixed-wheel velocity", Mode::FourWheel, VelocityUpdateWheels::Fixed),
    ];
    for (label, mode, velocity_update) in runs {
        let options = PipelineOptions {
            velocity_update,
            ..PipelineOptions::default()
        };
        let sol = run_wichins(&rec, &config, mode, &options)?;
        let method = if mode == Mode::TwoWheel { Method::TwoWheel } else { Method::FourWheel };
        let (row, _) = evaluate("urban", method, &sol, &rec.ground_truth)?;
        println!(
            "{label:<36} position RMSE {:6.3} m over {:.1} m  ({:.3} %), velocity RMSE {:.3} m/s",
            row.prmse, row.length_m, row.tde, row.vrmse
        );
    }
    Ok(())
}
