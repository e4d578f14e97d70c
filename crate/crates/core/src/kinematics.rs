//! No-skid wheel odometry.
//!
//! Every wheel `i` with hub at `r_i = (x_i, y_i, z_i)` in the body frame rolls
//! without slipping, so the hub velocity equals `Ω_i R_i n_i(β_i)`. Stacking
//! the planar components of all wheels gives the overdetermined system
//! `D · (v_x, v_y, ω_z)ᵀ = b`, solved here by least squares.
//!
//! `Ω_i` is the signed rolling rate: positive drives the contact point along
//! `+n_i`. Side-dependent gyro sign handling lives in the filters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Vec3;

const MAX_CONDITION: f64 = 1e12;

/// Mounting side of a wheel; left wheels carry σ = +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn mirrored(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Per-wheel mounting constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WheelGeometry {
    /// Hub centre in the body frame, metres.
    pub hub_position: [f64; 3],
    /// Effective rolling radius, metres.
    pub rolling_radius: f64,
    /// Distance of the wheel IMU from the hub, metres.
    #[serde(default)]
    pub sensor_offset: f64,
    pub side: Side,
    #[serde(default)]
    pub steerable: bool,
}

impl WheelGeometry {
    pub fn new(hub_position: Vec3, rolling_radius: f64, side: Side, steerable: bool) -> Self {
        Self {
            hub_position: [hub_position.x, hub_position.y, hub_position.z],
            rolling_radius,
            sensor_offset: 0.0,
            side,
            steerable,
        }
    }

    pub fn with_sensor_offset(mut self, rho: f64) -> Self {
        self.sensor_offset = rho;
        self
    }

    pub fn hub(&self) -> Vec3 {
        Vec3::from(self.hub_position)
    }

    pub fn side_sign(&self) -> f64 {
        self.side.sign()
    }

    /// 1 for steerable wheels, 0 for fixed ones.
    pub fn steer_gain(&self) -> f64 {
        if self.steerable {
            1.0
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rolling_radius > 0.0) {
            return Err(Error::Config(format!(
                "rolling radius must be positive, got {}",
                self.rolling_radius
            )));
        }
        if !(self.sensor_offset >= 0.0) {
            return Err(Error::Config(format!(
                "sensor offset must be non-negative, got {}",
                self.sensor_offset
            )));
        }
        if self.hub_position.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("hub position must be finite".into()));
        }
        Ok(())
    }
}

/// Rolling rate and steering angle of one wheel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelCommandState {
    pub rotation_speed: f64,
    pub steering_angle: f64,
}

impl WheelCommandState {
    pub fn new(rotation_speed: f64, steering_angle: f64) -> Self {
        Self {
            rotation_speed,
            steering_angle,
        }
    }
}

/// Planar body motion `(v_x, v_y, ω_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarVelocity {
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
}

/// Unit heading of a wheel steered by `beta`, in body coordinates.
pub fn wheel_direction(beta: f64) -> Vec3 {
    let (s, c) = beta.sin_cos();
    Vec3::new(c, s, 0.0)
}

/// Stacks two rows `[1, 0, -y_i]` and `[0, 1, x_i]` per wheel.
pub fn build_odometry_matrix(wheels: &[WheelGeometry]) -> Result<DMatrix<f64>> {
    if wheels.is_empty() {
        return Err(Error::EmptyInput("odometry needs at least one wheel"));
    }
    let mut d = DMatrix::zeros(2 * wheels.len(), 3);
    for (i, w) in wheels.iter().enumerate() {
        let [x, y, _] = w.hub_position;
        d[(2 * i, 0)] = 1.0;
        d[(2 * i, 2)] = -y;
        d[(2 * i + 1, 1)] = 1.0;
        d[(2 * i + 1, 2)] = x;
    }
    Ok(d)
}

/// Least-squares map `(DᵀD)⁻¹Dᵀ` from stacked hub velocities to body motion.
pub fn odometry_pseudo_inverse(wheels: &[WheelGeometry]) -> Result<DMatrix<f64>> {
    let d = build_odometry_matrix(wheels)?;
    let normal = d.transpose() * &d;
    let eig = normal.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) || max / min > MAX_CONDITION {
        return Err(Error::DegenerateGeometry(format!(
            "normal matrix condition {:.3e} exceeds {MAX_CONDITION:e}",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::DegenerateGeometry("normal matrix not positive definite".into()))?;
    Ok(chol.solve(&d.transpose()))
}

fn stacked_hub_velocities(wheels: &[WheelGeometry], states: &[WheelCommandState]) -> DVector<f64> {
    let mut b = DVector::zeros(2 * wheels.len());
    for (i, (w, s)) in wheels.iter().zip(states).enumerate() {
        let beta = if w.steerable { s.steering_angle } else { 0.0 };
        let speed = s.rotation_speed * w.rolling_radius;
        b[2 * i] = speed * beta.cos();
        b[2 * i + 1] = speed * beta.sin();
    }
    b
}

/// Body velocity and yaw rate from wheel rolling rates and steering angles.
pub fn forward_kinematics(
    wheels: &[WheelGeometry],
    states: &[WheelCommandState],
) -> Result<PlanarVelocity> {
    if wheels.len() != states.len() {
        return Err(Error::Domain(format!(
            "{} wheels but {} wheel states",
            wheels.len(),
            states.len()
        )));
    }
    let pinv = odometry_pseudo_inverse(wheels)?;
    let sol = pinv * stacked_hub_velocities(wheels, states);
    Ok(PlanarVelocity {
        vx: sol[0],
        vy: sol[1],
        yaw_rate: sol[2],
    })
}

fn contact_velocity(v: &Vec3, yaw_rate: f64, wheel: &WheelGeometry) -> (f64, f64) {
    let [x, y, _] = wheel.hub_position;
    (v.x - yaw_rate * y, v.y + yaw_rate * x)
}

/// Steering angle that aligns the wheel with its hub velocity.
///
/// Returns `None` when the hub is at rest and the angle is indeterminate.
pub fn inverse_kinematics_steering(v: &Vec3, yaw_rate: f64, wheel: &WheelGeometry) -> Option<f64> {
    let (along, across) = contact_velocity(v, yaw_rate, wheel);
    if along == 0.0 && across == 0.0 {
        None
    } else {
        Some(across.atan2(along))
    }
}

/// Rolling rate of a wheel steered by `beta` under no-skid conditions.
pub fn inverse_kinematics_speed(v: &Vec3, yaw_rate: f64, beta: f64, wheel: &WheelGeometry) -> f64 {
    let (along, across) = contact_velocity(v, yaw_rate, wheel);
    let (s, c) = beta.sin_cos();
    (along * c + across * s) / wheel.rolling_radius
}
