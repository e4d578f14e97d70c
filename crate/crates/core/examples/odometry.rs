//! No-skid forward and inverse kinematics of a four-wheel vehicle.

use wichins::kinematics::{forward_kinematics, inverse_kinematics_speed, inverse_kinematics_steering, WheelCommandState};
use wichins::{Vec3, VehicleConfig};

fn main() -> wichins::Result<()> {
    let config = VehicleConfig::default();
    let v = Vec3::new(8.0, 0.0, 0.0);
    let yaw_rate = 0.25;

    let mut cmds = Vec::new();
    for (id, w) in config.wheel_ids.iter().zip(&config.wheels) {
        let beta = if w.steerable { inverse_kinematics_steering(&v, yaw_rate, w).unwrap_or(0.0) } else { 0.0 };
        let omega = inverse_kinematics_speed(&v, yaw_rate, beta, w);
        println!("{id:>3}: steering {:+.4} rad, rolling {:+.3} rad/s", beta, omega);
        cmds.push(WheelCommandState::new(omega, beta));
    }

    let back = forward_kinematics(&config.wheels, &cmds)?;
    println!("recovered v_x {:.6} m/s, v_y {:.6} m/s, yaw rate {:.6} rad/s", back.vx, back.vy, back.yaw_rate);
    Ok(())
}
