//! Wheel filter acquiring an unknown phase from the wheel accelerometer.

use std::f64::consts::PI;

use wichins::sim::{chassis_reading, scenarios, simulate, TrajectorySpec};
use wichins::wheel::{WheelEkf, WheelParams};

fn main() -> wichins::Result<()> {
    let drive = TrajectorySpec::new(120.0, 0.0).hold(2.0).speed(4.0, 3.0).straight(5.0);
    let sim = simulate(&scenarios::clean(drive))?;
    let rec = &sim.recording;
    let wheel = 2;
    let geom = rec.wheels[wheel].geometry.clone();
    let samples = &rec.wheels[wheel].samples;

    // Start half a turn away from the true phase.
    let start = sim.truth[0].wheels[wheel].phase + PI * 0.9;
    let mut ekf = WheelEkf::with_phase(geom, WheelParams::default(), start);
    println!("initial phase error {:+.4} rad", wichins::geo::angle_wrap(start - sim.truth[0].wheels[wheel].phase)?);
    for (k, s) in samples.iter().enumerate() {
        let truth = &sim.truth[k];
        if k > 0 {
            ekf.predict(&s.gyro, truth.body.omega.z, s.t - samples[k - 1].t)?;
        }
        let (_, f_body) = chassis_reading(&truth.body, 9.80665);
        ekf.update(&s.accel, &f_body, &truth.body.omega)?;
        if k < 3 || k % 240 == 0 {
            let err = wichins::geo::angle_wrap(ekf.state().phase - truth.wheels[wheel].phase)?;
            println!(
                "t {:6.3} s  phase error {:+.4} rad  sigma {:.4}  rolling {:+.3} rad/s",
                s.t,
                err,
                ekf.gaussian().covariance[(1, 1)].sqrt(),
                ekf.state().rotation_speed
            );
        }
    }
    Ok(())
}
