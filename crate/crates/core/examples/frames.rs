//! Attitude and wheel-frame rotations, and the Euler round trip.

use wichins::geo::{body_to_wheel, euler_from_nav_to_body, nav_to_body, orthonormality_error, wheel_to_body, EulerAngles, Vec3};

fn main() {
    let e = EulerAngles::new(0.05, -0.02, 1.2);
    let c = nav_to_body(&e);
    println!("nav->body for roll {:.2}, pitch {:.2}, yaw {:.2}:{c:.4}", e.roll, e.pitch, e.yaw);
    println!("orthonormality error {:.1e}", orthonormality_error(&c));
    let back = euler_from_nav_to_body(&c);
    println!("recovered euler: {:.6} {:.6} {:.6}", back.roll, back.pitch, back.yaw);

    // Gravity seen by a level chassis, then by a spinning left and right wheel.
    let g = c * Vec3::new(0.0, 0.0, -9.80665);
    for (side, name) in [(1.0, "left"), (-1.0, "right")] {
        for alpha in [0.0, 1.0, 2.0] {
            let f = body_to_wheel(alpha, 0.0, side) * g;
            println!("{name} wheel, phase {alpha:.1}: f_w = [{:+.3} {:+.3} {:+.3}]", f.x, f.y, f.z);
        }
    }
    let m = wheel_to_body(0.7, 0.1, 1.0) * body_to_wheel(0.7, 0.1, 1.0);
    println!("wheel round trip deviates from identity by {:.1e}", (m - nalgebra::Matrix3::identity()).abs().max());
}
