//! Simulates a custom drive with a skid, writes it to disk and reads it back.

use std::f64::consts::FRAC_PI_2;

use wichins::dataset::{load_recording, write_recording};
use wichins::sim::{scenarios, simulate, SkidEvent, TrajectorySpec};

fn main() -> wichins::Result<()> {
    let drive = TrajectorySpec::new(120.0, 0.0)
        .hold(6.0)
        .speed(7.0, 5.0)
        .turn(30.0, FRAC_PI_2, 1.5)
        .straight(8.0)
        .speed(0.0, 5.0)
        .hold(2.0);
    let spec = scenarios::noisy(drive, 17).with_skid(SkidEvent {
        wheel: 3,
        start: 14.0,
        end: 15.0,
        slip: 0.25,
    });
    let sim = simulate(&spec)?;

    let dir = std::env::temp_dir().join("wichins-example-recording");
    write_recording(&dir, &sim.recording)?;
    let back = load_recording(&dir)?;
    assert_eq!(back, sim.recording);

    println!("wrote {} IMU streams to {}", back.wheels.len() + 1, dir.display());
    println!("  {} samples per IMU stream at {} Hz", back.chassis.len(), back.imu_rate_hz);
    println!("  {} ground-truth samples at {} Hz", back.ground_truth.len(), back.gt_rate_hz);
    for w in &back.wheels {
        println!("  wheel {:>2}: radius {:.3} m, steerable {}", w.id, w.geometry.rolling_radius, w.geometry.steerable);
    }
    Ok(())
}
