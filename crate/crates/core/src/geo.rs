//! Reference-frame mathematics.
//!
//! Three frames are used throughout the crate:
//!
//! * navigation frame `n`: north-east-down, fixed at the start point;
//! * body frame `b`: forward-right-down, fixed to the chassis;
//! * wheel frame `w`: fixed to a wheel-mounted IMU, x radial, y tangential,
//!   z axial.
//!
//! Attitude is carried as ZYX (yaw-pitch-roll) Euler angles. All angles are
//! radians.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Roll, pitch and yaw of the body frame with respect to the navigation frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn level() -> Self {
        Self::default()
    }

    /// Finite, away from gimbal lock.
    pub fn is_valid(&self) -> bool {
        self.roll.is_finite()
            && self.yaw.is_finite()
            && self.pitch.is_finite()
            && self.pitch.abs() < PI / 2.0
    }

    pub fn to_vector(self) -> Vec3 {
        Vec3::new(self.roll, self.pitch, self.yaw)
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Same attitude with roll and yaw wrapped into the principal interval.
    pub fn wrapped(self) -> Self {
        Self::new(wrap(self.roll), self.pitch, wrap(self.yaw))
    }
}

/// Removes whole periods from an angle: `x - 2π·floor((x + π) / 2π)`.
///
/// The result lies in `[-π, π)`; odd multiples of π map to `-π`.
pub fn angle_wrap(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cannot wrap non-finite angle {x}")));
    }
    Ok(wrap(x))
}

/// Infallible variant of [`angle_wrap`] for filter internals; NaN propagates.
#[inline]
pub(crate) fn wrap(x: f64) -> f64 {
    x - TAU * ((x + PI) / TAU).floor()
}

/// Skew-symmetric cross-product matrix: `skew(v) * u == v.cross(u)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Navigation-to-body rotation `T^b_n` for ZYX Euler angles.
pub fn nav_to_body(euler: &EulerAngles) -> Mat3 {
    let (sx, cx) = euler.roll.sin_cos();
    let (sy, cy) = euler.pitch.sin_cos();
    let (sz, cz) = euler.yaw.sin_cos();
    Mat3::new(
        cy * cz,
        cy * sz,
        -sy,
        sx * sy * cz - cx * sz,
        sx * sy * sz + cx * cz,
        sx * cy,
        cx * sy * cz + sx * sz,
        cx * sy * sz - sx * cz,
        cx * cy,
    )
}

/// Body-to-navigation rotation `T^n_b`, the transpose of [`nav_to_body`].
pub fn body_to_nav(euler: &EulerAngles) -> Mat3 {
    nav_to_body(euler).transpose()
}

/// Inverse of [`nav_to_body`]. Assumes the matrix is a rotation.
pub fn euler_from_nav_to_body(m: &Mat3) -> EulerAngles {
    let pitch = (-m[(0, 2)]).clamp(-1.0, 1.0).asin();
    let roll = m[(1, 2)].atan2(m[(2, 2)]);
    let yaw = m[(0, 1)].atan2(m[(0, 0)]);
    EulerAngles::new(roll, pitch, yaw)
}

/// Body-to-wheel rotation `T^w_b` for wheel phase `alpha`, steering angle
/// `beta` and side sign `side` (+1 left, -1 right).
pub fn body_to_wheel(alpha: f64, beta: f64, side: f64) -> Mat3 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Mat3::new(
        cb * ca,
        sb * ca,
        sa,
        -side * cb * sa,
        -side * sb * sa,
        side * ca,
        side * sb,
        -side * cb,
        0.0,
    )
}

/// Wheel-to-body rotation, the transpose of [`body_to_wheel`].
pub fn wheel_to_body(alpha: f64, beta: f64, side: f64) -> Mat3 {
    body_to_wheel(alpha, beta, side).transpose()
}

/// Rotation about the wheel axle by phase `alpha`, mapping the de-rotated hub
/// frame into the spinning wheel frame.
pub fn wheel_phase_rotation(alpha: f64) -> Mat3 {
    let (s, c) = alpha.sin_cos();
    Mat3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Gram-Schmidt re-orthonormalization of a nearly orthonormal matrix,
/// processing rows in order and rebuilding the last from a cross product.
pub fn reorthonormalize(m: &Mat3) -> Mat3 {
    let r0 = m.row(0).transpose().normalize();
    let r1 = m.row(1).transpose();
    let r1 = (r1 - r0 * r0.dot(&r1)).normalize();
    let r2 = r0.cross(&r1);
    Mat3::from_rows(&[r0.transpose(), r1.transpose(), r2.transpose()])
}

/// Largest absolute entry of `MᵀM - I`.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).abs().max()
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}
