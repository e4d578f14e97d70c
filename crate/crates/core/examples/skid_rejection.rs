//! A slipping wheel is rejected by the velocity gate instead of dragging
//! the estimate.

use wichins::eval::{evaluate, Method};
use wichins::sim::{scenarios, simulate, SkidEvent, TrajectorySpec};
use wichins::{run_wichins, Mode, PipelineOptions, VehicleConfig};

fn main() -> wichins::Result<()> {
    let drive = TrajectorySpec::new(120.0, 0.0).hold(6.0).speed(8.0, 6.0).straight(20.0);
    let skid = SkidEvent {
        wheel: 2,
        start: 15.0,
        end: 18.0,
        slip: 0.3,
    };
    for (label, spec) in [
        ("no skid", scenarios::clean(drive.clone())),
        ("rear-left slipping 30 %", scenarios::clean(drive.clone()).with_skid(skid)),
    ] {
        let rec = simulate(&spec)?.recording;
        let config = VehicleConfig::from_recording(&rec);
        let sol = run_wichins(&rec, &config, Mode::FourWheel, &PipelineOptions::default())?;
        let (row, _) = evaluate("skid", Method::FourWheel, &sol, &rec.ground_truth)?;
        println!(
            "{label:<24} position RMSE {:.3} m, gated velocity blocks per wheel {:?}, forced epochs {}",
            row.prmse, sol.diagnostics.velocity_gated, sol.diagnostics.velocity_forced
        );
    }
    Ok(())
}
