//! Per-wheel filter for rolling rate, phase, steering rate and steering angle.
//!
//! State `[Ω α β̇ β]`. The wheel gyro drives the prediction; the wheel
//! accelerometer, compared with the chassis specific force carried into the
//! wheel frame, makes the phase observable through the gravity direction.
//! Non-steerable wheels keep `β = β̇ = 0` exactly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::ekf::{Ekf, GaussianState, MeasurementModel, UpdateOutcome};
use crate::error::{Error, Result};
use crate::geo::{body_to_wheel, wrap, Vec3};
use crate::kinematics::WheelGeometry;
use crate::sim::NoiseSpec;

/// Mean of a wheel filter state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelState {
    /// Rolling rate `Ω`, rad/s, positive when driving forward.
    pub rotation_speed: f64,
    /// Phase `α`, rad.
    pub phase: f64,
    /// Steering rate `β̇`, rad/s.
    pub steering_rate: f64,
    /// Steering angle `β`, rad.
    pub steering_angle: f64,
}

impl WheelState {
    pub fn from_vector(x: &DVector<f64>) -> Self {
        Self {
            rotation_speed: x[0],
            phase: x[1],
            steering_rate: x[2],
            steering_angle: x[3],
        }
    }

    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.rotation_speed,
            self.phase,
            self.steering_rate,
            self.steering_angle,
        ])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WheelParams {
    /// Per-sample gyro standard deviation, rad/s.
    pub gyro_noise: f64,
    /// Per-sample accelerometer standard deviation, m/s².
    pub accel_noise: f64,
    pub accel_inflation: f64,
    pub process_inflation: f64,
    pub gate: Option<f64>,
    pub initial_phase_variance: f64,
    pub phase_rule: PhaseRule,
    /// Relinearizations per accelerometer update; 1 is a plain EKF update.
    pub update_iterations: usize,
    /// While the phase standard deviation exceeds this, the gate is not
    /// applied: the linearized innovation covariance is meaningless for a
    /// near-uniform phase prior.
    pub acquisition_phase_sigma: f64,
}

/// Quadrature used for the phase increment over one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseRule {
    /// `σ ω_z(t_k) Δt`. Accumulates `½ ΔΩ Δt` per step while the wheel accelerates.
    Rectangle,
    /// `σ (ω_z(t_{k-1}) + ω_z(t_k)) Δt / 2`, exact for linearly varying spin.
    #[default]
    Trapezoid,
}

impl WheelParams {
    pub fn from_noise(noise: &NoiseSpec, rate_hz: f64) -> Self {
        Self {
            gyro_noise: noise.gyro_sigma(rate_hz),
            accel_noise: noise.accel_sigma(rate_hz),
            ..Self::default()
        }
    }
}

impl Default for WheelParams {
    fn default() -> Self {
        let noise = NoiseSpec::tactical_grade(0);
        Self {
            gyro_noise: noise.gyro_sigma(120.0),
            accel_noise: noise.accel_sigma(120.0),
            accel_inflation: 10.0,
            process_inflation: 4.0,
            gate: Some(6.0),
            initial_phase_variance: PI * PI / 3.0,
            phase_rule: PhaseRule::default(),
            update_iterations: 10,
            acquisition_phase_sigma: 0.2,
        }
    }
}

/// Mean propagation for one gyro sample.
pub fn propagate_wheel_state(
    x: &WheelState,
    gyro: &Vec3,
    body_yaw_rate: f64,
    geom: &WheelGeometry,
    dt: f64,
) -> WheelState {
    propagate_wheel_state_with_phase_rate(x, gyro, gyro.z, body_yaw_rate, geom, dt)
}

/// As [`propagate_wheel_state`], advancing the phase with the axial rate
/// `phase_gyro_z` instead of the current sample.
pub fn propagate_wheel_state_with_phase_rate(
    x: &WheelState,
    gyro: &Vec3,
    phase_gyro_z: f64,
    body_yaw_rate: f64,
    geom: &WheelGeometry,
    dt: f64,
) -> WheelState {
    let sigma = geom.side_sign();
    let q = geom.steer_gain();
    let omega = sigma * gyro.z;
    let alpha = wrap(x.phase + sigma * phase_gyro_z * dt);
    let (sa, ca) = alpha.sin_cos();
    let beta_rate = q * (gyro.x * sa + sigma * gyro.y * ca - body_yaw_rate);
    let beta = q * wrap(x.steering_angle + beta_rate * dt);
    WheelState {
        rotation_speed: omega,
        phase: alpha,
        steering_rate: beta_rate,
        steering_angle: beta,
    }
}

/// `T^w_b · (f^b + ω × (ω × r)) − (ρ Ω², 0, 0)`.
pub fn expected_wheel_specific_force(
    x: &WheelState,
    f_body: &Vec3,
    omega: &Vec3,
    geom: &WheelGeometry,
) -> Vec3 {
    let r = geom.hub();
    let t = body_to_wheel(x.phase, x.steering_angle, geom.side_sign());
    let centripetal = omega.cross(&omega.cross(&r));
    t * (f_body + centripetal) - Vec3::new(geom.sensor_offset * x.rotation_speed.powi(2), 0.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WheelEkf {
    filter: Ekf,
    geom: WheelGeometry,
    params: WheelParams,
    gated: usize,
    last_axial: Option<f64>,
}

/// Axial rate that advances the phase over a step ending at `gyro_z`.
fn phase_rate(rule: PhaseRule, last: Option<f64>, gyro_z: f64) -> f64 {
    match (rule, last) {
        (PhaseRule::Trapezoid, Some(prev)) => 0.5 * (prev + gyro_z),
        _ => gyro_z,
    }
}

impl WheelEkf {
    /// Starts at rest with unknown phase.
    pub fn new(geom: WheelGeometry, params: WheelParams) -> Self {
        Self::with_phase(geom, params, 0.0)
    }

    pub fn with_phase(geom: WheelGeometry, params: WheelParams, phase: f64) -> Self {
        let q = geom.steer_gain();
        let state = GaussianState::from_diagonal(
            &[0.0, phase, 0.0, 0.0],
            &[
                params.gyro_noise.powi(2),
                params.initial_phase_variance,
                q * params.gyro_noise.powi(2),
                q * 0.01,
            ],
        );
        Self {
            filter: Ekf::new(state, vec![1, 3]),
            geom,
            params,
            gated: 0,
            last_axial: None,
        }
    }

    pub fn state(&self) -> WheelState {
        WheelState::from_vector(&self.filter.state.mean)
    }

    pub fn gaussian(&self) -> &GaussianState {
        &self.filter.state
    }

    pub fn geometry(&self) -> &WheelGeometry {
        &self.geom
    }

    pub fn gated_count(&self) -> usize {
        self.gated
    }

    fn process_noise(&self, dt: f64) -> DMatrix<f64> {
        let q = self.geom.steer_gain();
        let rate = (self.params.gyro_noise * dt).powi(2) * self.params.process_inflation;
        let angle = (self.params.gyro_noise * dt * dt).powi(2);
        DMatrix::from_diagonal(&DVector::from_vec(vec![rate, angle, q * rate, q * angle]))
    }

    pub fn predict(&mut self, gyro: &Vec3, body_yaw_rate: f64, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let (g, geom) = (*gyro, self.geom.clone());
        let spin = phase_rate(self.params.phase_rule, self.last_axial, g.z);
        let transition = move |x: &DVector<f64>| {
            propagate_wheel_state_with_phase_rate(&WheelState::from_vector(x), &g, spin, body_yaw_rate, &geom, dt)
                .to_vector()
        };
        let q = self.process_noise(dt);
        self.filter.predict(transition, &q)?;
        self.last_axial = Some(g.z);
        Ok(())
    }

    pub fn update(&mut self, accel: &Vec3, f_body: &Vec3, omega: &Vec3) -> Result<UpdateOutcome> {
        let (fb, w, geom) = (*f_body, *omega, self.geom.clone());
        let h = move |x: &DVector<f64>| {
            let f = expected_wheel_specific_force(&WheelState::from_vector(x), &fb, &w, &geom);
            DVector::from_column_slice(f.as_slice())
        };
        let r = DMatrix::from_diagonal_element(3, 3, self.params.accel_noise.powi(2) * self.params.accel_inflation);
        let model = MeasurementModel::new(h, r);
        let z = DVector::from_column_slice(accel.as_slice());
        let acquiring = self.filter.state.covariance[(1, 1)].sqrt() > self.params.acquisition_phase_sigma;
        let gate = if acquiring { None } else { self.params.gate };
        let outcome = self.filter.update_iterated(&z, &model, gate, self.params.update_iterations, 1e-9)?;
        if !outcome.is_applied() {
            self.gated += 1;
        }
        Ok(outcome)
    }
}

/// A set of wheel filters, run independently or as one stacked filter.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum WheelBank {
    Independent(Vec<WheelEkf>),
    Joint(JointWheelEkf),
}

impl WheelBank {
    pub fn independent(geoms: &[WheelGeometry], params: &WheelParams) -> Self {
        WheelBank::Independent(geoms.iter().map(|g| WheelEkf::new(g.clone(), params.clone())).collect())
    }

    pub fn joint(geoms: &[WheelGeometry], params: &WheelParams) -> Self {
        WheelBank::Joint(JointWheelEkf::new(geoms.to_vec(), params.clone()))
    }

    pub fn len(&self) -> usize {
        match self {
            WheelBank::Independent(v) => v.len(),
            WheelBank::Joint(j) => j.geoms.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn states(&self) -> Vec<WheelState> {
        match self {
            WheelBank::Independent(v) => v.iter().map(WheelEkf::state).collect(),
            WheelBank::Joint(j) => j.states(),
        }
    }

    pub fn gated_counts(&self) -> Vec<usize> {
        match self {
            WheelBank::Independent(v) => v.iter().map(WheelEkf::gated_count).collect(),
            WheelBank::Joint(j) => vec![j.gated; j.geoms.len()],
        }
    }

    pub fn predict(&mut self, gyros: &[Vec3], body_yaw_rate: f64, dt: f64) -> Result<()> {
        match self {
            WheelBank::Independent(v) => {
                for (w, g) in v.iter_mut().zip(gyros) {
                    w.predict(g, body_yaw_rate, dt)?;
                }
                Ok(())
            }
            WheelBank::Joint(j) => j.predict(gyros, body_yaw_rate, dt),
        }
    }

    pub fn update(&mut self, accels: &[Vec3], f_body: &Vec3, omega: &Vec3) -> Result<()> {
        match self {
            WheelBank::Independent(v) => {
                for (w, a) in v.iter_mut().zip(accels) {
                    w.update(a, f_body, omega)?;
                }
                Ok(())
            }
            WheelBank::Joint(j) => j.update(accels, f_body, omega).map(|_| ()),
        }
    }
}

/// All wheels stacked into one `4n`-state filter.
#[derive(Debug, Clone, PartialEq)]
pub struct JointWheelEkf {
    filter: Ekf,
    geoms: Vec<WheelGeometry>,
    params: WheelParams,
    gated: usize,
    last_axial: Option<Vec<f64>>,
}

impl JointWheelEkf {
    pub fn new(geoms: Vec<WheelGeometry>, params: WheelParams) -> Self {
        let n = geoms.len();
        let mut mean = Vec::with_capacity(4 * n);
        let mut var = Vec::with_capacity(4 * n);
        let mut angles = Vec::new();
        for (i, g) in geoms.iter().enumerate() {
            let single = WheelEkf::new(g.clone(), params.clone());
            mean.extend(single.filter.state.mean.iter());
            var.extend(single.filter.state.covariance.diagonal().iter());
            angles.extend([4 * i + 1, 4 * i + 3]);
        }
        Self {
            filter: Ekf::new(GaussianState::from_diagonal(&mean, &var), angles),
            geoms,
            params,
            gated: 0,
            last_axial: None,
        }
    }

    pub fn states(&self) -> Vec<WheelState> {
        let m = &self.filter.state.mean;
        (0..self.geoms.len())
            .map(|i| WheelState::from_vector(&m.rows(4 * i, 4).into_owned()))
            .collect()
    }

    pub fn gaussian(&self) -> &GaussianState {
        &self.filter.state
    }

    pub fn predict(&mut self, gyros: &[Vec3], body_yaw_rate: f64, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let geoms = self.geoms.clone();
        let gyros = gyros.to_vec();
        let spins: Vec<f64> = (0..geoms.len())
            .map(|i| phase_rate(self.params.phase_rule, self.last_axial.as_ref().map(|l| l[i]), gyros[i].z))
            .collect();
        self.last_axial = Some(gyros.iter().map(|g| g.z).collect());
        let transition = move |x: &DVector<f64>| {
            let mut out = x.clone();
            for (i, g) in geoms.iter().enumerate() {
                let s = WheelState::from_vector(&x.rows(4 * i, 4).into_owned());
                let next = propagate_wheel_state_with_phase_rate(&s, &gyros[i], spins[i], body_yaw_rate, g, dt);
                out.rows_mut(4 * i, 4).copy_from(&next.to_vector());
            }
            out
        };
        let n = self.geoms.len();
        let mut q = DMatrix::zeros(4 * n, 4 * n);
        for (i, g) in self.geoms.iter().enumerate() {
            let single = WheelEkf::new(g.clone(), self.params.clone());
            q.view_mut((4 * i, 4 * i), (4, 4)).copy_from(&single.process_noise(dt));
        }
        self.filter.predict(transition, &q)
    }

    pub fn update(&mut self, accels: &[Vec3], f_body: &Vec3, omega: &Vec3) -> Result<UpdateOutcome> {
        let (fb, w, geoms) = (*f_body, *omega, self.geoms.clone());
        let h = move |x: &DVector<f64>| {
            let mut z = DVector::zeros(3 * geoms.len());
            for (i, g) in geoms.iter().enumerate() {
                let s = WheelState::from_vector(&x.rows(4 * i, 4).into_owned());
                let f = expected_wheel_specific_force(&s, &fb, &w, g);
                z.rows_mut(3 * i, 3).copy_from(&f);
            }
            z
        };
        let m = 3 * self.geoms.len();
        let r = DMatrix::from_diagonal_element(m, m, self.params.accel_noise.powi(2) * self.params.accel_inflation);
        let model = MeasurementModel::new(h, r);
        let mut z = DVector::zeros(m);
        for (i, a) in accels.iter().enumerate() {
            z.rows_mut(3 * i, 3).copy_from(a);
        }
        let p = &self.filter.state.covariance;
        let acquiring = (0..self.geoms.len()).any(|i| p[(4 * i + 1, 4 * i + 1)].sqrt() > self.params.acquisition_phase_sigma);
        let gate = if acquiring { None } else { self.params.gate };
        let outcome = self.filter.update_iterated(&z, &model, gate, self.params.update_iterations, 1e-9)?;
        if !outcome.is_applied() {
            self.gated += 1;
        }
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Side;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    const G: f64 = 9.81;

    fn geom(side: Side, steerable: bool, rho: f64) -> WheelGeometry {
        WheelGeometry::new(Vec3::zeros(), 0.295, side, steerable).with_sensor_offset(rho)
    }

    #[test]
    fn predict_examples() {
        let mut w = WheelEkf::new(geom(Side::Left, false, 0.0), WheelParams::default());
        w.predict(&Vec3::new(0.0, 0.0, 10.0), 0.0, 0.01).unwrap();
        let s = w.state();
        assert_eq!(s.rotation_speed, 10.0);
        assert_abs_diff_eq!(s.phase, 0.1, epsilon = 1e-15);
        assert_eq!((s.steering_rate, s.steering_angle), (0.0, 0.0));

        let mut w = WheelEkf::new(geom(Side::Right, false, 0.0), WheelParams::default());
        w.predict(&Vec3::new(0.0, 0.0, -10.0), 0.0, 0.01).unwrap();
        assert_eq!(w.state().rotation_speed, 10.0);

        let mut w = WheelEkf::with_phase(geom(Side::Left, true, 0.0), WheelParams::default(), 0.7);
        w.predict(&Vec3::zeros(), 0.0, 0.01).unwrap();
        assert_eq!(w.state().phase, 0.7);
        assert_eq!(w.state().steering_angle, 0.0);
    }

    #[test]
    fn steering_rate_removes_body_yaw() {
        // wheel frame sees body yaw rate plus steering rate about the axle-normal axis
        let g = geom(Side::Left, true, 0.0);
        let alpha = 0.9;
        let beta_rate = 0.2;
        let yaw = 0.3;
        let t = body_to_wheel(alpha, 0.0, 1.0);
        let gyro = t * Vec3::new(0.0, 0.0, yaw + beta_rate);
        let x = WheelState { phase: alpha, ..Default::default() };
        let next = propagate_wheel_state(&x, &gyro, yaw, &g, 1e-9);
        assert_abs_diff_eq!(next.steering_rate, beta_rate, epsilon = 1e-9);
    }

    #[test]
    fn specific_force_examples() {
        let x = WheelState::default();
        let f = Vec3::new(0.0, 0.0, -G);
        let z = Vec3::zeros();
        assert_abs_diff_eq!(
            expected_wheel_specific_force(&x, &f, &z, &geom(Side::Left, false, 0.0)),
            Vec3::new(0.0, -G, 0.0),
            epsilon = 1e-15
        );
        let x90 = WheelState { phase: FRAC_PI_2, ..Default::default() };
        assert_abs_diff_eq!(
            expected_wheel_specific_force(&x90, &f, &z, &geom(Side::Left, false, 0.0)),
            Vec3::new(-G, 0.0, 0.0),
            epsilon = 1e-12
        );
        let spin = WheelState { rotation_speed: 10.0, ..Default::default() };
        assert_abs_diff_eq!(
            expected_wheel_specific_force(&spin, &f, &z, &geom(Side::Left, false, 0.05)),
            Vec3::new(-5.0, -G, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn matching_measurement_is_noop() {
        let mut w = WheelEkf::with_phase(geom(Side::Left, false, 0.0), WheelParams::default(), 0.4);
        let f = Vec3::new(0.0, 0.0, -G);
        let z = expected_wheel_specific_force(&w.state(), &f, &Vec3::zeros(), w.geometry());
        let before = w.state();
        w.update(&z, &f, &Vec3::zeros()).unwrap();
        assert_eq!(w.state(), before);
    }

    #[test]
    fn phase_converges_from_gravity() {
        let g = geom(Side::Right, false, 0.0);
        let truth = WheelState { phase: 0.2, ..Default::default() };
        let f = Vec3::new(0.0, 0.0, -9.80665);
        let z = expected_wheel_specific_force(&truth, &f, &Vec3::zeros(), &g);
        let mut w = WheelEkf::new(g, WheelParams::default());
        let dt = 1.0 / 120.0;
        for _ in 0..240 {
            w.predict(&Vec3::zeros(), 0.0, dt).unwrap();
            w.update(&z, &f, &Vec3::zeros()).unwrap();
        }
        assert!((w.state().phase - 0.2).abs() < 0.01);
    }

    #[test]
    fn fixed_wheel_never_steers() {
        let mut w = WheelEkf::new(geom(Side::Left, false, 0.0), WheelParams::default());
        let f = Vec3::new(0.4, -0.3, -9.7);
        for k in 0..50 {
            let s = k as f64 * 0.1;
            w.predict(&Vec3::new(s.sin(), 2.0 * s.cos(), 5.0), 0.3, 0.01).unwrap();
            w.update(&Vec3::new(s.cos() * 9.0, s.sin() * 9.0, 0.5), &f, &Vec3::new(0.0, 0.1, 0.3))
                .unwrap();
            assert_eq!(w.state().steering_angle, 0.0);
            assert_eq!(w.state().steering_rate, 0.0);
        }
    }

    #[test]
    fn joint_bank_matches_independent() {
        let geoms = vec![
            WheelGeometry::new(Vec3::new(2.6, -0.7, 0.0), 0.295, Side::Left, true),
            WheelGeometry::new(Vec3::new(0.0, 0.7, 0.0), 0.295, Side::Right, false),
        ];
        let params = WheelParams { gate: None, ..WheelParams::default() };
        let mut a = WheelBank::independent(&geoms, &params);
        let mut b = WheelBank::joint(&geoms, &params);
        let f = Vec3::new(0.2, 0.1, -9.8);
        for k in 0..100 {
            let s = k as f64 * 0.05;
            let gyros = [Vec3::new(0.1 * s.sin(), 0.1 * s.cos(), 8.0), Vec3::new(0.0, 0.02, -8.0)];
            let accels = [
                Vec3::new(-9.8 * s.sin(), -9.8 * s.cos(), 0.1),
                Vec3::new(-9.8 * s.cos(), 9.8 * s.sin(), 0.0),
            ];
            a.predict(&gyros, 0.05, 1.0 / 120.0).unwrap();
            b.predict(&gyros, 0.05, 1.0 / 120.0).unwrap();
            a.update(&accels, &f, &Vec3::new(0.0, 0.0, 0.05)).unwrap();
            b.update(&accels, &f, &Vec3::new(0.0, 0.0, 0.05)).unwrap();
        }
        for (x, y) in a.states().iter().zip(b.states()) {
            assert_abs_diff_eq!(x.phase, y.phase, epsilon = 1e-6);
            assert_abs_diff_eq!(x.steering_angle, y.steering_angle, epsilon = 1e-6);
            assert_abs_diff_eq!(x.rotation_speed, y.rotation_speed, epsilon = 1e-9);
        }
    }

    #[test]
    fn trapezoid_phase_is_exact_for_linear_spin() {
        let dt = 1.0 / 120.0;
        let accel = 6.0;
        let run = |rule| {
            let params = WheelParams { phase_rule: rule, gate: None, ..WheelParams::default() };
            let mut w = WheelEkf::new(geom(Side::Left, false, 0.0), params);
            for k in 0..=60 {
                w.predict(&Vec3::new(0.0, 0.0, accel * k as f64 * dt), 0.0, dt).unwrap();
            }
            w.state().phase
        };
        // 60 steps of linearly rising spin: exact phase is a t² / 2 at t = 0.5 s
        let exact = 0.5 * accel * 0.25;
        assert_abs_diff_eq!(run(PhaseRule::Trapezoid), exact, epsilon = 1e-12);
        assert_abs_diff_eq!(run(PhaseRule::Rectangle) - exact, 0.5 * accel * 0.5 * dt, epsilon = 1e-12);
    }

    #[test]
    fn uniform_prior_acquires_any_phase() {
        let f = Vec3::new(0.0, 0.0, -9.80665);
        let dt = 1.0 / 120.0;
        for k in 0..24 {
            let phase = -3.0 + 0.25 * k as f64;
            for (side, steerable) in [(Side::Left, false), (Side::Right, true)] {
                let g = geom(side, steerable, 0.0);
                let truth = WheelState { phase, ..Default::default() };
                let z = expected_wheel_specific_force(&truth, &f, &Vec3::zeros(), &g);
                let mut w = WheelEkf::new(g, WheelParams::default());
                for _ in 0..240 {
                    w.predict(&Vec3::zeros(), 0.0, dt).unwrap();
                    w.update(&z, &f, &Vec3::zeros()).unwrap();
                }
                assert!(wrap(w.state().phase - phase).abs() < 0.01, "phase {phase}: {:?}", w.state());
                assert_eq!(w.gated_count(), 0);
            }
        }
    }

    #[test]
    fn converged_wheel_gates_outliers() {
        let g = geom(Side::Left, false, 0.0);
        let f = Vec3::new(0.0, 0.0, -9.80665);
        let truth = WheelState { phase: 0.7, ..Default::default() };
        let z = expected_wheel_specific_force(&truth, &f, &Vec3::zeros(), &g);
        let mut w = WheelEkf::new(g, WheelParams::default());
        for _ in 0..120 {
            w.predict(&Vec3::zeros(), 0.0, 1.0 / 120.0).unwrap();
            w.update(&z, &f, &Vec3::zeros()).unwrap();
        }
        let before = w.state();
        let outcome = w.update(&(z + Vec3::new(3.0, 0.0, 0.0)), &f, &Vec3::zeros()).unwrap();
        assert!(!outcome.is_applied());
        assert_eq!(w.state(), before);
        assert_eq!(w.gated_count(), 1);
    }
}
