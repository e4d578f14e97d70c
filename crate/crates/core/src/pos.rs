//! Body velocity and navigation position.
//!
//! State `[v_x v_y v_z r_n r_e r_d]` with velocity in the body frame and
//! position in the navigation frame. Wheel accelerometers, brought to the
//! body origin and fused, drive the forward velocity; the wheel gyros,
//! predicted from velocity through no-skid inverse kinematics, correct it.
//! Position is dead-reckoned from the corrected velocity.

use nalgebra::{DMatrix, DVector};

use crate::ekf::{update_gated, GaussianState, MeasurementModel, UpdateOutcome};
use crate::error::{Error, Result};
use crate::geo::{body_to_nav, body_to_wheel, wheel_to_body, EulerAngles, Mat3, Vec3};
use crate::kinematics::{inverse_kinematics_speed, WheelGeometry};
use crate::ori::STANDARD_GRAVITY;
use crate::sim::NoiseSpec;
use crate::wheel::WheelState;

/// `T^b_w · (f^w + (ρ ω_z², 0, 0)) − ω × (ω × r)`.
pub fn compensate_wheel_accel(
    f_wheel: &Vec3,
    wheel_gyro_z: f64,
    state: &WheelState,
    omega: &Vec3,
    geom: &WheelGeometry,
) -> Vec3 {
    let t = wheel_to_body(state.phase, state.steering_angle, geom.side_sign());
    let radial = Vec3::new(geom.sensor_offset * wheel_gyro_z * wheel_gyro_z, 0.0, 0.0);
    t * (f_wheel + radial) - omega.cross(&omega.cross(&geom.hub()))
}

/// Weight `1 / rms²` for a sensor with the given noise RMS.
pub fn fusion_weight(rms: f64) -> f64 {
    1.0 / (rms * rms)
}

/// Weighted mean `Σ w_i f_i / Σ w_i`.
pub fn fuse_wheel_accels(forces: &[Vec3], weights: &[f64]) -> Result<Vec3> {
    if forces.is_empty() {
        return Err(Error::EmptyInput("fusion needs at least one wheel"));
    }
    if forces.len() != weights.len() {
        return Err(Error::Domain(format!(
            "{} forces but {} weights",
            forces.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Domain("fusion weights must be positive".into()));
    }
    let mut sum = Vec3::zeros();
    let mut total = 0.0;
    for (f, &w) in forces.iter().zip(weights) {
        sum += f * w;
        total += w;
    }
    Ok(sum / total)
}

/// Removes gravity from the fused specific force and keeps the forward axis.
pub fn linear_and_forward_accel(fused: &Vec3, euler: &EulerAngles, g: f64) -> (Vec3, Vec3) {
    let lin = fused - crate::geo::nav_to_body(euler) * Vec3::new(0.0, 0.0, -g);
    (lin, Vec3::new(lin.x, 0.0, 0.0))
}

/// Wheel-gyro readings implied by a body velocity under no-skid rolling.
pub fn expected_wheel_gyros(v: &Vec3, omega: &Vec3, states: &[WheelState], geoms: &[WheelGeometry]) -> Vec<Vec3> {
    states
        .iter()
        .zip(geoms)
        .map(|(s, g)| expected_wheel_gyro(v, omega, s, g))
        .collect()
}

pub fn expected_wheel_gyro(v: &Vec3, omega: &Vec3, state: &WheelState, geom: &WheelGeometry) -> Vec3 {
    let sigma = geom.side_sign();
    let spin = inverse_kinematics_speed(v, omega.z, state.steering_angle, geom);
    let t = body_to_wheel(state.phase, state.steering_angle, sigma);
    Vec3::new(0.0, 0.0, sigma * spin) + t * (omega + Vec3::new(0.0, 0.0, state.steering_rate))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosParams {
    pub gravity: f64,
    /// Per-sample wheel gyro standard deviation, rad/s.
    pub gyro_noise: f64,
    /// Per-sample wheel accelerometer standard deviation, m/s².
    pub accel_noise: f64,
    pub process_inflation: f64,
    pub gyro_inflation: f64,
    /// Per-wheel gate on the axial gyro residual, in standard deviations.
    pub gate: Option<f64>,
    pub initial_velocity_variance: f64,
    /// Applies a zero vertical-velocity pseudo-measurement once per second.
    pub vertical_velocity_prior: bool,
    pub vertical_velocity_prior_std: f64,
}

impl PosParams {
    pub fn from_noise(noise: &NoiseSpec, rate_hz: f64) -> Self {
        Self {
            gyro_noise: noise.gyro_sigma(rate_hz),
            accel_noise: noise.accel_sigma(rate_hz),
            ..Self::default()
        }
    }
}

impl Default for PosParams {
    fn default() -> Self {
        let noise = NoiseSpec::tactical_grade(0);
        Self {
            gravity: STANDARD_GRAVITY,
            gyro_noise: noise.gyro_sigma(120.0),
            accel_noise: noise.accel_sigma(120.0),
            process_inflation: 4.0,
            gyro_inflation: 10.0,
            gate: Some(6.0),
            initial_velocity_variance: 1.0,
            vertical_velocity_prior: false,
            vertical_velocity_prior_std: 0.5,
        }
    }
}

/// Outcome of one gyro correction.
#[derive(Debug, Clone, PartialEq)]
pub struct PosUpdate {
    pub outcome: UpdateOutcome,
    /// Wheels excluded by the gate.
    pub gated_wheels: Vec<usize>,
    /// True when every wheel failed the gate and all were used anyway.
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosEkf {
    state: GaussianState,
    params: PosParams,
    gated: Vec<usize>,
    since_prior: f64,
}

impl PosEkf {
    pub fn new(params: PosParams, wheels: usize) -> Self {
        let v = params.initial_velocity_variance;
        let state = GaussianState::from_diagonal(&[0.0; 6], &[v, v, v, 0.0, 0.0, 0.0]);
        Self {
            state,
            params,
            gated: vec![0; wheels],
            since_prior: 0.0,
        }
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::new(self.state.mean[0], self.state.mean[1], self.state.mean[2])
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.state.mean[3], self.state.mean[4], self.state.mean[5])
    }

    pub fn gaussian(&self) -> &GaussianState {
        &self.state
    }

    pub fn params(&self) -> &PosParams {
        &self.params
    }

    pub fn gated_counts(&self) -> &[usize] {
        &self.gated
    }

    /// Accelerometer noise of the fused specific force for `n` equal wheels.
    fn fused_accel_noise(&self, n: usize) -> f64 {
        self.params.accel_noise / (n.max(1) as f64).sqrt()
    }

    /// Velocity prediction from a forward acceleration.
    pub fn predict(&mut self, a_fwd: &Vec3, wheels: usize, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        for i in 0..3 {
            self.state.mean[i] += a_fwd[i] * dt;
        }
        let q = (self.fused_accel_noise(wheels) * dt).powi(2) * self.params.process_inflation;
        for i in 0..3 {
            self.state.covariance[(i, i)] += q;
        }
        if !self.state.mean.iter().all(|x| x.is_finite()) {
            return Err(Error::Divergence("velocity prediction".into()));
        }
        Ok(())
    }

    /// Corrects velocity against the stacked three-axis wheel gyros.
    pub fn update(
        &mut self,
        gyros: &[Vec3],
        omega: &Vec3,
        states: &[WheelState],
        geoms: &[WheelGeometry],
    ) -> Result<PosUpdate> {
        let all: Vec<usize> = (0..geoms.len()).collect();
        self.update_with(gyros, omega, states, geoms, &all)
    }

    /// [`PosEkf::update`] restricted to the wheels listed in `wheels`.
    pub fn update_with(
        &mut self,
        gyros: &[Vec3],
        omega: &Vec3,
        states: &[WheelState],
        geoms: &[WheelGeometry],
        wheels: &[usize],
    ) -> Result<PosUpdate> {
        let n = geoms.len();
        if gyros.len() != n || states.len() != n || n != self.gated.len() {
            return Err(Error::Domain("wheel count mismatch in velocity update".into()));
        }
        if wheels.is_empty() || wheels.iter().any(|&i| i >= n) {
            return Err(Error::Domain(format!("invalid velocity-update wheel set {wheels:?}")));
        }
        let all = wheels.to_vec();
        let mut gated_wheels = Vec::new();
        let mut forced = false;
        let mut used = all.clone();
        if let Some(k) = self.params.gate {
            let (innov, _) = crate::ekf::innovation(&self.state, &stack(gyros, &all), &self.model(omega, states, geoms, &all))?;
            used = all
                .iter()
                .enumerate()
                .filter(|&(slot, _)| {
                    let j = 3 * slot + 2;
                    innov.residual[j].abs() <= k * innov.covariance[(j, j)].sqrt()
                })
                .map(|(_, &i)| i)
                .collect();
            gated_wheels = all.iter().copied().filter(|i| !used.contains(i)).collect();
            if used.is_empty() {
                used = all.clone();
                forced = true;
            }
        }
        for &i in &gated_wheels {
            if !forced {
                self.gated[i] += 1;
            }
        }
        let model = self.model(omega, states, geoms, &used);
        let (next, outcome) = update_gated(&self.state, &stack(gyros, &used), &model, None, &[])?;
        self.state = next;
        Ok(PosUpdate {
            outcome,
            gated_wheels: if forced { Vec::new() } else { gated_wheels },
            forced,
        })
    }

    fn model(
        &self,
        omega: &Vec3,
        states: &[WheelState],
        geoms: &[WheelGeometry],
        used: &[usize],
    ) -> MeasurementModel<impl Fn(&DVector<f64>) -> DVector<f64>> {
        let w = *omega;
        let states: Vec<WheelState> = used.iter().map(|&i| states[i]).collect();
        let geoms: Vec<WheelGeometry> = used.iter().map(|&i| geoms[i].clone()).collect();
        let h = move |x: &DVector<f64>| {
            let v = Vec3::new(x[0], x[1], x[2]);
            let out = expected_wheel_gyros(&v, &w, &states, &geoms);
            stack(&out, &(0..out.len()).collect::<Vec<_>>())
        };
        let m = 3 * used.len();
        let r = DMatrix::from_diagonal_element(m, m, self.params.gyro_noise.powi(2) * self.params.gyro_inflation);
        MeasurementModel::new(h, r)
    }

    /// Zero vertical-velocity pseudo-measurement, applied once per elapsed second
    /// when enabled.
    pub fn vertical_prior(&mut self, dt: f64) -> Result<bool> {
        if !self.params.vertical_velocity_prior {
            return Ok(false);
        }
        self.since_prior += dt;
        if self.since_prior < 1.0 - 1e-9 {
            return Ok(false);
        }
        self.since_prior -= 1.0;
        let mut hm = DMatrix::zeros(1, 6);
        hm[(0, 2)] = 1.0;
        let h = |x: &DVector<f64>| DVector::from_element(1, x[2]);
        let model = MeasurementModel::new(h, DMatrix::from_element(1, 1, self.params.vertical_velocity_prior_std.powi(2)))
            .with_jacobian(hm);
        let (next, outcome) = update_gated(&self.state, &DVector::zeros(1), &model, None, &[])?;
        self.state = next;
        Ok(outcome.is_applied())
    }

    /// Forward-Euler position step `r ← r + T^n_b v Δt`.
    pub fn integrate(&mut self, euler: &EulerAngles, dt: f64) {
        let c = body_to_nav(euler);
        let dr = c * self.velocity() * dt;
        for i in 0..3 {
            self.state.mean[3 + i] += dr[i];
        }
        let f = transition_matrix(&c, dt);
        self.state.covariance = &f * &self.state.covariance * f.transpose();
        self.state.symmetrize();
    }
}

fn transition_matrix(c: &Mat3, dt: f64) -> DMatrix<f64> {
    let mut f = DMatrix::identity(6, 6);
    for r in 0..3 {
        for k in 0..3 {
            f[(3 + r, k)] = c[(r, k)] * dt;
        }
    }
    f
}

fn stack(vs: &[Vec3], idx: &[usize]) -> DVector<f64> {
    let mut z = DVector::zeros(3 * idx.len());
    for (j, &i) in idx.iter().enumerate() {
        z.rows_mut(3 * j, 3).copy_from(&vs[i]);
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Side;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn left() -> WheelGeometry {
        WheelGeometry::new(Vec3::zeros(), 0.295, Side::Left, false)
    }

    #[test]
    fn compensation_examples() {
        let s = WheelState::default();
        let z = Vec3::zeros();
        assert_abs_diff_eq!(
            compensate_wheel_accel(&Vec3::new(0.0, -9.81, 0.0), 0.0, &s, &z, &left()),
            Vec3::new(0.0, 0.0, -9.81),
            epsilon = 1e-15
        );
        let g = left().with_sensor_offset(0.05);
        let base = compensate_wheel_accel(&Vec3::zeros(), 0.0, &s, &z, &g);
        let spun = compensate_wheel_accel(&Vec3::zeros(), 10.0, &s, &z, &g);
        assert_abs_diff_eq!(spun - base, wheel_to_body(0.0, 0.0, 1.0) * Vec3::new(5.0, 0.0, 0.0), epsilon = 1e-12);

        let g = WheelGeometry::new(Vec3::new(0.0, -0.75, 0.0), 0.295, Side::Left, false);
        let w = Vec3::new(0.0, 0.0, 1.0);
        let r = g.hub();
        let got = compensate_wheel_accel(&Vec3::zeros(), 0.0, &s, &w, &g);
        let double_cross = Vec3::new(
            w.y * (w.x * r.y - w.y * r.x) - w.z * (w.z * r.x - w.x * r.z),
            w.z * (w.y * r.z - w.z * r.y) - w.x * (w.x * r.y - w.y * r.x),
            w.x * (w.z * r.x - w.x * r.z) - w.y * (w.y * r.z - w.z * r.y),
        );
        assert_abs_diff_eq!(got, -double_cross, epsilon = 1e-15);
    }

    #[test]
    fn fusion_examples() {
        let f = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 0.0)];
        assert_eq!(fuse_wheel_accels(&f, &[1.0, 1.0]).unwrap(), Vec3::new(2.0, 0.0, 0.0));
        let w = [fusion_weight(0.01), fusion_weight(0.02)];
        assert_abs_diff_eq!(w[0], 1e4, epsilon = 1e-8);
        assert_abs_diff_eq!(w[1], 2.5e3, epsilon = 1e-8);
        assert_abs_diff_eq!(fuse_wheel_accels(&f, &w).unwrap(), Vec3::new(1.4, 0.0, 0.0), epsilon = 1e-12);
        let one = [Vec3::new(0.3, -0.2, 9.0)];
        assert_eq!(fuse_wheel_accels(&one, &[7.0]).unwrap(), one[0]);
        assert!(fuse_wheel_accels(&[], &[]).is_err());
    }

    #[test]
    fn forward_accel_examples() {
        let g = 9.80665;
        let (lin, fwd) = linear_and_forward_accel(&Vec3::new(0.0, 0.0, -g), &EulerAngles::level(), g);
        assert_eq!((lin, fwd), (Vec3::zeros(), Vec3::zeros()));
        let (_, fwd) = linear_and_forward_accel(&Vec3::new(1.5, 0.3, -g), &EulerAngles::level(), g);
        assert_eq!(fwd, Vec3::new(1.5, 0.0, 0.0));
        let e = EulerAngles::new(0.0, 0.1, 0.0);
        let fused = Vec3::new(g * 0.1f64.sin(), 0.0, -g * 0.1f64.cos()) + Vec3::new(0.7, 0.0, 0.0);
        let (lin, _) = linear_and_forward_accel(&fused, &e, g);
        let gravity_body = crate::geo::nav_to_body(&e) * Vec3::new(0.0, 0.0, -g);
        assert_abs_diff_eq!(lin, fused - gravity_body, epsilon = 1e-15);
        assert_abs_diff_eq!(lin, Vec3::new(0.7, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn predict_and_integrate_examples() {
        let mut p = PosEkf::new(PosParams::default(), 2);
        p.state.mean[0] = 1.0;
        p.predict(&Vec3::new(0.5, 0.0, 0.0), 2, 0.01).unwrap();
        assert_abs_diff_eq!(p.velocity().x, 1.005, epsilon = 1e-15);

        let mut p = PosEkf::new(PosParams::default(), 2);
        p.state.mean[0] = 1.0;
        p.integrate(&EulerAngles::level(), 0.01);
        assert_abs_diff_eq!(p.position(), Vec3::new(0.01, 0.0, 0.0), epsilon = 1e-15);

        let mut p = PosEkf::new(PosParams::default(), 2);
        p.state.mean[0] = 1.0;
        let e = EulerAngles::new(0.0, 0.0, FRAC_PI_2);
        p.integrate(&e, 1.0);
        let expected = crate::geo::nav_to_body(&e).transpose() * Vec3::new(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(p.position(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(p.position(), Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        assert!(p.gaussian().is_psd());
    }

    #[test]
    fn wheel_gyro_examples() {
        let s = WheelState::default();
        let g = [left()];
        let out = expected_wheel_gyros(&Vec3::new(2.95, 0.0, 0.0), &Vec3::zeros(), &[s], &g);
        assert_abs_diff_eq!(out[0], Vec3::new(0.0, 0.0, 10.0), epsilon = 1e-12);
        let out = expected_wheel_gyros(&Vec3::new(2.95, 0.0, 0.0), &Vec3::new(0.0, 0.0, 0.5), &[s], &g);
        assert_abs_diff_eq!(out[0], Vec3::new(0.0, 0.5, 10.0), epsilon = 1e-12);
        let out = expected_wheel_gyros(&Vec3::zeros(), &Vec3::zeros(), &[s], &g);
        assert_eq!(out[0], Vec3::zeros());
    }

    fn rear_pair() -> Vec<WheelGeometry> {
        vec![
            WheelGeometry::new(Vec3::new(0.0, -0.73, 0.0), 0.295, Side::Left, false),
            WheelGeometry::new(Vec3::new(0.0, 0.73, 0.0), 0.295, Side::Right, false),
        ]
    }

    #[test]
    fn consistent_gyros_leave_state() {
        let geoms = rear_pair();
        let states = [WheelState::default(); 2];
        let mut p = PosEkf::new(PosParams::default(), 2);
        p.state.mean[0] = 4.0;
        let z = expected_wheel_gyros(&p.velocity(), &Vec3::zeros(), &states, &geoms);
        let before = p.velocity();
        let up = p.update(&z, &Vec3::zeros(), &states, &geoms).unwrap();
        assert!(up.outcome.is_applied() && up.gated_wheels.is_empty());
        assert_eq!(p.velocity(), before);
    }

    #[test]
    fn straight_drive_converges() {
        let geoms = rear_pair();
        let states = [WheelState::default(); 2];
        let mut p = PosEkf::new(PosParams::default(), 2);
        let z = expected_wheel_gyros(&Vec3::new(5.0, 0.0, 0.0), &Vec3::zeros(), &states, &geoms);
        let dt = 1.0 / 120.0;
        for _ in 0..120 {
            p.predict(&Vec3::zeros(), 2, dt).unwrap();
            p.update(&z, &Vec3::zeros(), &states, &geoms).unwrap();
            p.integrate(&EulerAngles::level(), dt);
        }
        assert!((p.velocity().x - 5.0).abs() < 0.01);
    }

    #[test]
    fn skidding_wheel_is_gated() {
        let geoms = rear_pair();
        let states = [WheelState::default(); 2];
        let mut p = PosEkf::new(PosParams::default(), 2);
        let z = expected_wheel_gyros(&Vec3::new(5.0, 0.0, 0.0), &Vec3::zeros(), &states, &geoms);
        let dt = 1.0 / 120.0;
        for _ in 0..240 {
            p.predict(&Vec3::zeros(), 2, dt).unwrap();
            p.update(&z, &Vec3::zeros(), &states, &geoms).unwrap();
        }
        let sigma = p.params.gyro_noise * p.params.gyro_inflation.sqrt();
        let mut bad = z.clone();
        bad[0].z += 8.0 * sigma;
        let before = p.velocity();
        let up = p.update(&bad, &Vec3::zeros(), &states, &geoms).unwrap();
        assert_eq!(up.gated_wheels, vec![0]);
        assert_eq!(p.gated_counts(), &[1, 0]);
        assert!((p.velocity() - before).norm() < 1e-6);
    }

    #[test]
    fn integration_is_exact_euler_step() {
        let mut p = PosEkf::new(PosParams::default(), 2);
        p.state.mean[0] = 3.3;
        p.state.mean[1] = -0.2;
        let e = EulerAngles::new(0.02, -0.05, 2.2);
        let r0 = p.position();
        p.integrate(&e, 1.0 / 120.0);
        let expected = body_to_nav(&e) * p.velocity() * (1.0 / 120.0);
        assert_abs_diff_eq!(p.position() - r0, expected, epsilon = 1e-15);
    }

    #[test]
    fn vertical_prior_fires_once_per_second() {
        let params = PosParams { vertical_velocity_prior: true, ..PosParams::default() };
        let mut p = PosEkf::new(params, 2);
        p.state.mean[2] = 1.0;
        let mut fired = 0;
        for _ in 0..240 {
            if p.vertical_prior(1.0 / 120.0).unwrap() {
                fired += 1;
            }
        }
        assert_eq!(fired, 2);
        assert!(p.velocity().z.abs() < 1.0);
    }

    #[test]
    fn subset_update_ignores_other_wheels() {
        let geoms = rear_pair();
        let states = [WheelState::default(); 2];
        let truth = expected_wheel_gyros(&Vec3::new(4.0, 0.0, 0.0), &Vec3::zeros(), &states, &geoms);
        let mut garbage = truth.clone();
        garbage[0] = Vec3::new(0.0, 0.0, 100.0);
        let mut a = PosEkf::new(PosParams::default(), 2);
        let mut b = PosEkf::new(PosParams::default(), 2);
        for _ in 0..60 {
            a.update_with(&truth, &Vec3::zeros(), &states, &geoms, &[1]).unwrap();
            b.update_with(&garbage, &Vec3::zeros(), &states, &geoms, &[1]).unwrap();
        }
        assert_eq!(a.velocity(), b.velocity());
        assert!((a.velocity().x - 4.0).abs() < 0.01);
        assert_eq!(b.gated_counts(), &[0, 0]);
        assert!(a.update_with(&truth, &Vec3::zeros(), &states, &geoms, &[]).is_err());
        assert!(a.update_with(&truth, &Vec3::zeros(), &states, &geoms, &[2]).is_err());
    }

    #[test]
    fn subset_gate_counts_real_wheel_index() {
        let mut geoms = rear_pair();
        geoms.push(WheelGeometry::new(Vec3::new(2.6, 0.73, 0.0), 0.295, Side::Right, false));
        let states = [WheelState::default(); 3];
        let z = expected_wheel_gyros(&Vec3::new(5.0, 0.0, 0.0), &Vec3::zeros(), &states, &geoms);
        let mut p = PosEkf::new(PosParams::default(), 3);
        for _ in 0..240 {
            p.predict(&Vec3::zeros(), 3, 1.0 / 120.0).unwrap();
            p.update(&z, &Vec3::zeros(), &states, &geoms).unwrap();
        }
        let mut bad = z.clone();
        bad[2].z += 1.0;
        let up = p.update_with(&bad, &Vec3::zeros(), &states, &geoms, &[1, 2]).unwrap();
        assert_eq!(up.gated_wheels, vec![2]);
        assert_eq!(p.gated_counts(), &[0, 0, 1]);
    }
}
