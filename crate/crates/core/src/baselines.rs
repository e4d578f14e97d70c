//! Reference dead-reckoning methods without filtering.
//!
//! * wheel odometry from the axial gyros of two fixed wheels,
//! * strapdown integration of the chassis IMU,
//! * strapdown integration of a single wheel IMU after removing its spin.
//!
//! None of them estimate biases; their drift is the point of comparison.

use crate::dataset::{ImuSample, Recording};
use crate::error::{Error, Result};
use crate::geo::{body_to_nav, euler_from_nav_to_body, reorthonormalize, skew, wrap, EulerAngles, Mat3, Vec3};
use crate::kinematics::{forward_kinematics, PlanarVelocity, WheelCommandState, WheelGeometry};
use crate::ori::euler_rate_matrix;
use crate::pipeline::{initial_attitude, select_wheels, Mode, NavSample, NavSolution, VehicleConfig};

/// Planar pose integrated by wheel odometry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OdometryState {
    pub heading: f64,
    pub position: Vec3,
}

/// One odometry step from the axial gyro readings of `geoms`.
///
/// Position advances along the heading held at the start of the step.
pub fn odo_step(
    axial_gyros: &[f64],
    geoms: &[WheelGeometry],
    state: &OdometryState,
    dt: f64,
) -> Result<(PlanarVelocity, OdometryState)> {
    let cmds: Vec<WheelCommandState> = axial_gyros
        .iter()
        .zip(geoms)
        .map(|(w, g)| WheelCommandState::new(g.side_sign() * w, 0.0))
        .collect();
    let v = forward_kinematics(geoms, &cmds)?;
    let (s, c) = state.heading.sin_cos();
    let step = Vec3::new(c * v.vx - s * v.vy, s * v.vx + c * v.vy, 0.0) * dt;
    Ok((
        v,
        OdometryState {
            heading: wrap(state.heading + v.yaw_rate * dt),
            position: state.position + step,
        },
    ))
}

fn wheel_stream<'a>(rec: &'a Recording, id: &str) -> Result<&'a [ImuSample]> {
    rec.wheels
        .iter()
        .find(|w| w.id == id)
        .map(|w| w.samples.as_slice())
        .ok_or_else(|| Error::MissingStream(format!("wheel '{id}'")))
}

/// Odometry over the fixed wheel pair. Heading starts at zero.
pub fn run_odometry(rec: &Recording, config: &VehicleConfig) -> Result<NavSolution> {
    let active = select_wheels(config, Mode::TwoWheel)?;
    let geoms: Vec<WheelGeometry> = active.iter().map(|&i| config.wheels[i].clone()).collect();
    let ids: Vec<String> = active.iter().map(|&i| config.wheel_ids[i].clone()).collect();
    let streams = ids.iter().map(|id| wheel_stream(rec, id)).collect::<Result<Vec<_>>>()?;
    let n = streams.iter().map(|s| s.len()).min().unwrap_or(0);
    let mut sol = NavSolution {
        wheel_ids: ids,
        ..NavSolution::default()
    };
    let mut state = OdometryState::default();
    let sample = |t: f64, st: &OdometryState, v: &PlanarVelocity| {
        NavSample::new(
            t,
            st.position,
            Vec3::new(v.vx, v.vy, 0.0),
            EulerAngles::new(0.0, 0.0, st.heading),
            v.yaw_rate,
        )
    };
    let mut last = PlanarVelocity { vx: 0.0, vy: 0.0, yaw_rate: 0.0 };
    for k in 0..n {
        let t = streams[0][k].t;
        if k > 0 {
            let dt = t - streams[0][k - 1].t;
            let gyros: Vec<f64> = streams.iter().map(|s| s[k].gyro.z).collect();
            let (v, next) = odo_step(&gyros, &geoms, &state, dt)?;
            sol.samples.push(sample(t, &next, &v));
            state = next;
            last = v;
        } else {
            sol.samples.push(sample(t, &state, &last));
        }
    }
    Ok(sol)
}

/// Navigation-frame position, velocity and body-to-nav rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrapdownState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Body-to-nav rotation, kept orthonormal.
    pub attitude: Mat3,
}

impl StrapdownState {
    pub fn at_rest(euler: &EulerAngles) -> Self {
        Self {
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            attitude: body_to_nav(euler),
        }
    }

    pub fn euler(&self) -> EulerAngles {
        euler_from_nav_to_body(&self.attitude.transpose())
    }
}

/// One strapdown step with the attitude held at the start of the step:
/// `a = C f + g`, `r += v Δt + a Δt²/2`, `v += a Δt`, `C ← C (I + [ω×] Δt)`.
pub fn strapdown_step(state: &StrapdownState, gyro: &Vec3, accel: &Vec3, g: f64, dt: f64) -> StrapdownState {
    let a = state.attitude * accel + Vec3::new(0.0, 0.0, g);
    StrapdownState {
        position: state.position + state.velocity * dt + a * (0.5 * dt * dt),
        velocity: state.velocity + a * dt,
        attitude: reorthonormalize(&(state.attitude * (Mat3::identity() + skew(gyro) * dt))),
    }
}

/// How a strapdown run picks its starting attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialAttitude {
    /// Roll and pitch from the mean specific force over the window, yaw zero.
    Leveled { window: f64 },
    Given(EulerAngles),
}

impl Default for InitialAttitude {
    fn default() -> Self {
        InitialAttitude::Leveled { window: 2.0 }
    }
}

/// Integrates body-frame samples from rest.
pub fn integrate_strapdown(samples: &[ImuSample], g: f64, init: InitialAttitude) -> NavSolution {
    let mut sol = NavSolution::default();
    let Some(first) = samples.first() else {
        return sol;
    };
    let euler0 = match init {
        InitialAttitude::Leveled { window } => initial_attitude(samples, window, 0.0),
        InitialAttitude::Given(e) => e,
    };
    let mut state = StrapdownState::at_rest(&euler0);
    let record = |sol: &mut NavSolution, t: f64, st: &StrapdownState, omega: &Vec3| {
        let e = st.euler();
        let v_body = st.attitude.transpose() * st.velocity;
        let yaw_rate = (euler_rate_matrix(e.roll, e.pitch) * omega).z;
        let mut s = NavSample::new(t, st.position, v_body, e, yaw_rate);
        s.velocity_nav = st.velocity;
        sol.samples.push(s);
    };
    record(&mut sol, first.t, &state, &first.gyro);
    for w in samples.windows(2) {
        let dt = w[1].t - w[0].t;
        state = strapdown_step(&state, &w[0].gyro, &w[0].accel, g, dt);
        record(&mut sol, w[1].t, &state, &w[1].gyro);
    }
    sol
}

/// Strapdown integration of the chassis IMU.
pub fn run_chassis_ins(rec: &Recording, config: &VehicleConfig, init: InitialAttitude) -> NavSolution {
    let samples: Vec<ImuSample> = if config.chassis_mount.is_identity() {
        rec.chassis.clone()
    } else {
        let c = config.chassis_mount.imu_to_body();
        rec.chassis.iter().map(|s| ImuSample::new(s.t, c * s.gyro, c * s.accel)).collect()
    };
    integrate_strapdown(&samples, config.gravity, init)
}

/// Wheel phase integrated from the axial gyro.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelPhase {
    pub phase: f64,
}

impl WheelPhase {
    /// `α ← α + σ ω_z Δt`.
    pub fn advance(&mut self, gyro_z: f64, side: f64, dt: f64) {
        self.phase = wrap(self.phase + side * gyro_z * dt);
    }

    /// Removes the spin about the axle and rotates a wheel reading into the
    /// hub frame aligned with the body.
    pub fn to_body(&self, sample: &ImuSample, geom: &WheelGeometry) -> ImuSample {
        let c = crate::geo::wheel_to_body(self.phase, 0.0, geom.side_sign());
        let spinless = Vec3::new(sample.gyro.x, sample.gyro.y, 0.0);
        ImuSample::new(sample.t, c * spinless, c * sample.accel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelInsOptions {
    /// Wheel to use; the first fixed wheel when `None`.
    pub wheel: Option<usize>,
    pub init: InitialAttitude,
    /// Feeds the wheel samples to the integrator untouched.
    pub bypass_wheel_transform: bool,
}

/// Wheel phase series and body-frame samples derived from one wheel stream.
pub fn despin_wheel(samples: &[ImuSample], geom: &WheelGeometry) -> (Vec<f64>, Vec<ImuSample>) {
    let mut ph = WheelPhase::default();
    let mut phases = Vec::with_capacity(samples.len());
    let mut out = Vec::with_capacity(samples.len());
    for (k, s) in samples.iter().enumerate() {
        if k > 0 {
            ph.advance(s.gyro.z, geom.side_sign(), s.t - samples[k - 1].t);
        }
        phases.push(ph.phase);
        out.push(ph.to_body(s, geom));
    }
    (phases, out)
}

/// Strapdown integration of a single wheel IMU.
pub fn run_wheel_ins(rec: &Recording, config: &VehicleConfig, options: &WheelInsOptions) -> Result<NavSolution> {
    let idx = match options.wheel {
        Some(i) if i < config.wheels.len() => i,
        Some(i) => return Err(Error::Config(format!("wheel {i} does not exist"))),
        None => select_wheels(config, Mode::TwoWheel)?[0],
    };
    let geom = &config.wheels[idx];
    let id = &config.wheel_ids[idx];
    let raw = wheel_stream(rec, id)?;
    let samples = if options.bypass_wheel_transform {
        raw.to_vec()
    } else {
        despin_wheel(raw, geom).1
    };
    let mut sol = integrate_strapdown(&samples, config.gravity, options.init);
    sol.wheel_ids = vec![id.clone()];
    Ok(sol)
}
