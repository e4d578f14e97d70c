//! Chassis attitude filter.
//!
//! State `[φ θ ψ]`. The chassis gyro drives the Euler-angle kinematics; the
//! chassis accelerometer corrects roll and pitch through the gravity
//! direction, with the centripetal term `ω × v` removed using the body
//! velocity of the previous step. Yaw is carried by the gyro alone.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::ekf::{Ekf, GaussianState, MeasurementModel, UpdateOutcome};
use crate::error::{Error, Result};
use crate::geo::{nav_to_body, EulerAngles, Mat3, Vec3};
use crate::sim::NoiseSpec;

pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Margin kept between pitch and ±π/2.
pub const PITCH_GUARD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct OriParams {
    pub gravity: f64,
    /// Per-sample gyro standard deviation per axis, rad/s.
    pub gyro_noise: Vec3,
    /// Per-sample accelerometer standard deviation per axis, m/s².
    pub accel_noise: Vec3,
    /// Multiplier on the accelerometer variance.
    pub accel_inflation: f64,
    /// Multiplier on the gyro-driven process variance.
    pub process_inflation: f64,
    /// Per-axis innovation gate in standard deviations.
    pub gate: Option<f64>,
    pub initial_variance: f64,
}

impl OriParams {
    pub fn from_noise(noise: &NoiseSpec, rate_hz: f64) -> Self {
        Self {
            gyro_noise: Vec3::repeat(noise.gyro_sigma(rate_hz)),
            accel_noise: Vec3::repeat(noise.accel_sigma(rate_hz)),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.gravity > 0.0
            && self.gyro_noise.iter().all(|&s| s > 0.0)
            && self.accel_noise.iter().all(|&s| s > 0.0)
            && self.accel_inflation > 0.0
            && self.process_inflation > 0.0;
        if positive {
            Ok(())
        } else {
            Err(Error::Config("attitude filter parameters must be positive".into()))
        }
    }
}

impl Default for OriParams {
    fn default() -> Self {
        let noise = NoiseSpec::tactical_grade(0);
        Self {
            gravity: STANDARD_GRAVITY,
            gyro_noise: Vec3::repeat(noise.gyro_sigma(120.0)),
            accel_noise: Vec3::repeat(noise.accel_sigma(120.0)),
            accel_inflation: 10.0,
            process_inflation: 4.0,
            gate: Some(6.0),
            initial_variance: 0.01,
        }
    }
}

/// Maps body rates to Euler-angle rates for ZYX angles.
pub fn euler_rate_matrix(roll: f64, pitch: f64) -> Mat3 {
    let (sx, cx) = roll.sin_cos();
    let (sy, cy) = pitch.sin_cos();
    let ty = sy / cy;
    Mat3::new(
        1.0,
        sx * ty,
        cx * ty,
        0.0,
        cx,
        -sx,
        0.0,
        sx / cy,
        cx / cy,
    )
}

/// `T^b_n · (0, 0, -g) + ω × v`.
pub fn expected_body_specific_force(euler: &EulerAngles, omega: &Vec3, v_body: &Vec3, g: f64) -> Vec3 {
    nav_to_body(euler) * Vec3::new(0.0, 0.0, -g) + omega.cross(v_body)
}

/// Roll and pitch that align the averaged accelerometer reading with gravity.
pub fn level_from_accel(mean_accel: &Vec3) -> EulerAngles {
    let f = mean_accel;
    let roll = (-f.y).atan2(-f.z);
    let pitch = f.x.atan2((f.y * f.y + f.z * f.z).sqrt());
    EulerAngles::new(roll, pitch, 0.0)
}

/// Mean of the accelerometer samples whose time lies within `window` of the
/// first one.
pub fn leveling_mean<'a, I>(samples: I, window: f64) -> Option<Vec3>
where
    I: IntoIterator<Item = (f64, &'a Vec3)>,
{
    let mut it = samples.into_iter();
    let (t0, first) = it.next()?;
    let mut sum = *first;
    let mut n = 1.0;
    for (t, f) in it {
        if t - t0 > window {
            break;
        }
        sum += f;
        n += 1.0;
    }
    Some(sum / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OriEkf {
    filter: Ekf,
    params: OriParams,
    gated: usize,
    saturations: usize,
}

impl OriEkf {
    pub fn new(initial: EulerAngles, params: OriParams) -> Self {
        let v = params.initial_variance;
        let state = GaussianState::from_diagonal(&[initial.roll, initial.pitch, initial.yaw], &[v, v, v]);
        Self {
            filter: Ekf::new(state, vec![0, 2]),
            params,
            gated: 0,
            saturations: 0,
        }
    }

    pub fn euler(&self) -> EulerAngles {
        EulerAngles::from_slice(self.filter.state.mean.as_slice())
    }

    pub fn state(&self) -> &GaussianState {
        &self.filter.state
    }

    pub fn params(&self) -> &OriParams {
        &self.params
    }

    pub fn gated_count(&self) -> usize {
        self.gated
    }

    pub fn saturation_count(&self) -> usize {
        self.saturations
    }

    /// Body-to-nav rotation for the current estimate.
    pub fn nav_to_body(&self) -> Mat3 {
        nav_to_body(&self.euler())
    }

    pub fn predict(&mut self, omega: &Vec3, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let w = *omega;
        let transition = move |x: &DVector<f64>| {
            let rate = euler_rate_matrix(x[0], x[1]) * w;
            DVector::from_fn(3, |i, _| x[i] + rate[i] * dt)
        };
        let sg = self.params.gyro_noise * dt;
        let q = DMatrix::from_diagonal(&DVector::from_fn(3, |i, _| {
            sg[i] * sg[i] * self.params.process_inflation
        }));
        self.filter.predict(transition, &q)?;
        self.guard_pitch();
        Ok(())
    }

    fn guard_pitch(&mut self) {
        let limit = FRAC_PI_2 - PITCH_GUARD;
        let pitch = &mut self.filter.state.mean[1];
        if pitch.abs() > limit {
            *pitch = pitch.clamp(-limit, limit);
            self.saturations += 1;
        }
    }

    pub fn update(&mut self, accel: &Vec3, omega: &Vec3, v_body: &Vec3) -> Result<UpdateOutcome> {
        let (w, v, g) = (*omega, *v_body, self.params.gravity);
        let h = move |x: &DVector<f64>| {
            let f = expected_body_specific_force(&EulerAngles::from_slice(x.as_slice()), &w, &v, g);
            DVector::from_column_slice(f.as_slice())
        };
        let k = self.params.accel_inflation;
        let r = DMatrix::from_diagonal(&DVector::from_fn(3, |i, _| {
            self.params.accel_noise[i].powi(2) * k
        }));
        let model = MeasurementModel::new(h, r);
        let z = DVector::from_column_slice(accel.as_slice());
        let outcome = self.filter.update(&z, &model, self.params.gate)?;
        if !outcome.is_applied() {
            self.gated += 1;
        }
        self.guard_pitch();
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::{FRAC_PI_4, PI};

    const G: f64 = STANDARD_GRAVITY;

    fn filter(e: EulerAngles) -> OriEkf {
        OriEkf::new(e, OriParams::default())
    }

    #[test]
    fn predict_examples() {
        let mut f = filter(EulerAngles::level());
        f.predict(&Vec3::new(0.0, 0.0, 0.1), 0.01).unwrap();
        let e = f.euler();
        assert_abs_diff_eq!(e.to_vector(), Vec3::new(0.0, 0.0, 0.001), epsilon = 1e-15);

        let mut f = filter(EulerAngles::new(0.0, FRAC_PI_4, 0.0));
        f.predict(&Vec3::new(0.0, 0.0, 1.0), 0.01).unwrap();
        let e = f.euler();
        assert_abs_diff_eq!(e.roll, 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(e.pitch, FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(e.yaw, 0.01 * 2f64.sqrt(), epsilon = 1e-12);

        let start = EulerAngles::new(0.2, -0.3, 1.1);
        let mut f = filter(start);
        f.predict(&Vec3::zeros(), 0.01).unwrap();
        assert_eq!(f.euler(), start);
    }

    #[test]
    fn nonpositive_step_rejected() {
        assert!(filter(EulerAngles::level()).predict(&Vec3::zeros(), 0.0).is_err());
    }

    #[test]
    fn pitch_is_clamped_and_flagged() {
        let mut f = filter(EulerAngles::new(0.0, FRAC_PI_2 - 0.06, 0.0));
        f.predict(&Vec3::new(0.0, 1.0, 0.0), 0.1).unwrap();
        assert_eq!(f.saturation_count(), 1);
        assert_abs_diff_eq!(f.euler().pitch, FRAC_PI_2 - PITCH_GUARD, epsilon = 1e-15);
    }

    #[test]
    fn specific_force_examples() {
        let z = Vec3::zeros();
        assert_eq!(
            expected_body_specific_force(&EulerAngles::level(), &z, &z, G),
            Vec3::new(0.0, 0.0, -G)
        );
        let f = expected_body_specific_force(
            &EulerAngles::level(),
            &Vec3::new(0.0, 0.0, 0.5),
            &Vec3::new(2.0, 0.0, 0.0),
            G,
        );
        assert_abs_diff_eq!(f, Vec3::new(0.0, 1.0, -G), epsilon = 1e-15);
        let f = expected_body_specific_force(&EulerAngles::new(PI / 2.0, 0.0, 0.0), &z, &z, G);
        assert_abs_diff_eq!(f, Vec3::new(0.0, -G, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn leveling_inverts_gravity_reading() {
        let e = EulerAngles::new(0.12, -0.33, 0.0);
        let f = expected_body_specific_force(&e, &Vec3::zeros(), &Vec3::zeros(), G);
        let l = level_from_accel(&f);
        assert_abs_diff_eq!(l.roll, e.roll, epsilon = 1e-12);
        assert_abs_diff_eq!(l.pitch, e.pitch, epsilon = 1e-12);
    }

    #[test]
    fn consistent_measurement_is_noop() {
        let mut f = filter(EulerAngles::level());
        let before = f.euler();
        let outcome = f
            .update(&Vec3::new(0.0, 0.0, -G), &Vec3::zeros(), &Vec3::zeros())
            .unwrap();
        assert!(outcome.is_applied());
        assert_eq!(f.euler(), before);
    }

    #[test]
    fn roll_error_converges_when_stationary() {
        let mut f = filter(EulerAngles::new(0.05, 0.0, 0.0));
        let dt = 1.0 / 120.0;
        for _ in 0..500 {
            f.predict(&Vec3::zeros(), dt).unwrap();
            f.update(&Vec3::new(0.0, 0.0, -G), &Vec3::zeros(), &Vec3::zeros())
                .unwrap();
        }
        assert!(f.euler().roll.abs() < 0.005, "roll {}", f.euler().roll);
    }

    #[test]
    fn outlier_is_gated() {
        let mut f = filter(EulerAngles::level());
        for _ in 0..200 {
            f.predict(&Vec3::zeros(), 1.0 / 120.0).unwrap();
            f.update(&Vec3::new(0.0, 0.0, -G), &Vec3::zeros(), &Vec3::zeros())
                .unwrap();
        }
        let sigma = f.params().accel_noise.x * f.params().accel_inflation.sqrt();
        let before = f.euler();
        let gated = f.gated_count();
        let outcome = f
            .update(&Vec3::new(6.5 * sigma * 1.05, 0.0, -G), &Vec3::zeros(), &Vec3::zeros())
            .unwrap();
        assert!(!outcome.is_applied());
        assert_eq!(f.euler(), before);
        assert_eq!(f.gated_count(), gated + 1);
    }

    #[test]
    fn yaw_is_untouched_by_level_updates() {
        let mut f = filter(EulerAngles::new(0.0, 0.0, 0.4));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = Normal::new(0.0, 0.0129).unwrap();
        for _ in 0..300 {
            let yaw = f.euler().yaw;
            let z = Vec3::new(n.sample(&mut rng), n.sample(&mut rng), -G + n.sample(&mut rng));
            f.update(&z, &Vec3::zeros(), &Vec3::zeros()).unwrap();
            assert!((f.euler().yaw - yaw).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_noisy_sensor_stays_level() {
        let noise = NoiseSpec::tactical_grade(11);
        let params = OriParams::from_noise(&noise, 120.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ng = Normal::new(0.0, params.gyro_noise.x).unwrap();
        let na = Normal::new(0.0, params.accel_noise.x).unwrap();
        let mut f = OriEkf::new(EulerAngles::new(0.03, -0.03, 0.0), params);
        let dt = 1.0 / 120.0;
        for k in 0..(130 * 120) {
            let w = Vec3::from_fn(|_, _| ng.sample(&mut rng));
            let a = Vec3::new(0.0, 0.0, -G) + Vec3::from_fn(|_, _| na.sample(&mut rng));
            f.predict(&w, dt).unwrap();
            f.update(&a, &w, &Vec3::zeros()).unwrap();
            if k >= 10 * 120 {
                let e = f.euler();
                assert!(e.roll.abs() < 1f64.to_radians() && e.pitch.abs() < 1f64.to_radians());
            }
        }
    }

    #[test]
    fn gravity_norm_preserved() {
        for &(r, p, y) in &[(0.3, 0.2, 1.0), (-2.0, 1.2, -3.0), (3.1, -0.9, 0.2)] {
            let f = expected_body_specific_force(&EulerAngles::new(r, p, y), &Vec3::zeros(), &Vec3::zeros(), G);
            assert_abs_diff_eq!(f.norm(), G, epsilon = 1e-10);
        }
    }
}
