//! Discrete-time extended Kalman filter machinery shared by the three stage
//! filters.
//!
//! The engine is model-agnostic: transitions and measurement functions are
//! closures over the state mean. Jacobians are central finite differences
//! unless the caller supplies one. Components listed as angles are wrapped
//! after every step, and angle-typed measurement residuals are wrapped before
//! they reach the gain.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geo::wrap;

/// Mean and covariance of a Gaussian belief.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Self {
        assert_eq!(mean.len(), covariance.nrows());
        assert_eq!(covariance.nrows(), covariance.ncols());
        Self { mean, covariance }
    }

    pub fn from_diagonal(mean: &[f64], variances: &[f64]) -> Self {
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn symmetrize(&mut self) {
        let p = &self.covariance;
        self.covariance = (p + p.transpose()) * 0.5;
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (&self.covariance - self.covariance.transpose()).abs().max() <= tol
    }

    /// Smallest eigenvalue of the symmetrized covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        let p = (&self.covariance + self.covariance.transpose()) * 0.5;
        p.symmetric_eigen().eigenvalues.min()
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -1e-12
    }

    fn wrap_angles(&mut self, angles: &[usize]) {
        for &i in angles {
            self.mean[i] = wrap(self.mean[i]);
        }
    }
}

/// Finite-difference step for component `x_j`: `1e-6 · max(1, |x_j|)`.
pub fn default_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Central-difference Jacobian of `f` at `x`.
///
/// `step` gives the perturbation per component; output components listed in
/// `angle_outputs` have their differences wrapped so a probe straddling ±π
/// does not register a full turn.
pub fn numeric_jacobian<F>(
    f: F,
    x: &DVector<f64>,
    step: impl Fn(f64) -> f64,
    angle_outputs: &[usize],
) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut probe = x.clone();
    for j in 0..n {
        let h = step(x[j]);
        probe[j] = x[j] + h;
        let fp = f(&probe);
        probe[j] = x[j] - h;
        let fm = f(&probe);
        probe[j] = x[j];
        let mut d = fp - fm;
        for &i in angle_outputs {
            d[i] = wrap(d[i]);
        }
        let col = d / (2.0 * h);
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite Jacobian probe in column {j}"
            )));
        }
        cols.push(col);
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(m, n, |r, c| cols[c][r]))
}

/// Measurement function plus its noise covariance.
pub struct MeasurementModel<H> {
    pub predict_measurement: H,
    pub noise: DMatrix<f64>,
    /// Measurement components whose residuals are wrapped.
    pub angle_components: Vec<usize>,
    /// Analytic measurement Jacobian at the prior mean, if known.
    pub jacobian: Option<DMatrix<f64>>,
}

impl<H> MeasurementModel<H>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub fn new(predict_measurement: H, noise: DMatrix<f64>) -> Self {
        Self {
            predict_measurement,
            noise,
            angle_components: Vec::new(),
            jacobian: None,
        }
    }

    pub fn with_angle_components(mut self, idx: Vec<usize>) -> Self {
        self.angle_components = idx;
        self
    }

    pub fn with_jacobian(mut self, h: DMatrix<f64>) -> Self {
        self.jacobian = Some(h);
        self
    }
}

/// Residual statistics of one update attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovation {
    pub residual: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl Innovation {
    /// `|ν_j| / sqrt(S_jj)` per component.
    pub fn normalized(&self) -> DVector<f64> {
        DVector::from_fn(self.residual.len(), |i, _| {
            self.residual[i].abs() / self.covariance[(i, i)].sqrt()
        })
    }

    pub fn max_normalized(&self) -> f64 {
        self.normalized().iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdateOutcome {
    Applied(Innovation),
    /// A residual component exceeded the gate; state untouched.
    Gated(Innovation),
    /// Innovation covariance could not be inverted; state untouched.
    Singular,
}

impl UpdateOutcome {
    pub fn is_applied(&self) -> bool {
        matches!(self, UpdateOutcome::Applied(_))
    }

    pub fn innovation(&self) -> Option<&Innovation> {
        match self {
            UpdateOutcome::Applied(i) | UpdateOutcome::Gated(i) => Some(i),
            UpdateOutcome::Singular => None,
        }
    }
}

fn check_finite(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence(format!("{what} produced a non-finite value")))
    }
}

/// Propagates `state` through `transition` with additive process noise `q`.
///
/// The transition Jacobian is taken from `jacobian` when given, otherwise
/// computed numerically. Angle components are wrapped afterwards.
pub fn predict_with<F>(
    state: &GaussianState,
    transition: F,
    jacobian: Option<&DMatrix<f64>>,
    q: &DMatrix<f64>,
    angle_states: &[usize],
) -> Result<GaussianState>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mean = transition(&state.mean);
    check_finite(&mean, "transition")?;
    let f = match jacobian {
        Some(f) => f.clone(),
        None => numeric_jacobian(&transition, &state.mean, default_step, angle_states)?,
    };
    let covariance = &f * &state.covariance * f.transpose() + q;
    let mut out = GaussianState { mean, covariance };
    out.symmetrize();
    out.wrap_angles(angle_states);
    Ok(out)
}

/// [`predict_with`] using a numeric Jacobian and no angle components.
pub fn predict<F>(state: &GaussianState, transition: F, q: &DMatrix<f64>) -> Result<GaussianState>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    predict_with(state, transition, None, q, &[])
}

/// Evaluates the innovation of `z` against `model` at the state mean.
pub fn innovation<H>(
    state: &GaussianState,
    z: &DVector<f64>,
    model: &MeasurementModel<H>,
) -> Result<(Innovation, DMatrix<f64>)>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    let predicted = (model.predict_measurement)(&state.mean);
    if predicted.len() != z.len() {
        return Err(Error::Domain(format!(
            "measurement has {} components, model predicts {}",
            z.len(),
            predicted.len()
        )));
    }
    check_finite(&predicted, "measurement model")?;
    let h = match &model.jacobian {
        Some(h) => h.clone(),
        None => numeric_jacobian(
            &model.predict_measurement,
            &state.mean,
            default_step,
            &model.angle_components,
        )?,
    };
    let mut residual = z - predicted;
    for &i in &model.angle_components {
        residual[i] = wrap(residual[i]);
    }
    let s = &h * &state.covariance * h.transpose() + &model.noise;
    let s = (&s + s.transpose()) * 0.5;
    Ok((
        Innovation {
            residual,
            covariance: s,
        },
        h,
    ))
}

/// EKF measurement update with Joseph-form covariance.
///
/// With `gate = Some(k)`, any residual component beyond `k` standard
/// deviations rejects the whole measurement.
pub fn update_gated<H>(
    state: &GaussianState,
    z: &DVector<f64>,
    model: &MeasurementModel<H>,
    gate: Option<f64>,
    angle_states: &[usize],
) -> Result<(GaussianState, UpdateOutcome)>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    let (innov, h) = innovation(state, z, model)?;
    if let Some(k) = gate {
        if innov.max_normalized() > k {
            return Ok((state.clone(), UpdateOutcome::Gated(innov)));
        }
    }
    let s_inv = match innov.covariance.clone().cholesky() {
        Some(c) => c.inverse(),
        None => return Ok((state.clone(), UpdateOutcome::Singular)),
    };
    let p = &state.covariance;
    let gain = p * h.transpose() * s_inv;
    let mean = &state.mean + &gain * &innov.residual;
    check_finite(&mean, "update")?;
    let n = state.dim();
    let ikh = DMatrix::identity(n, n) - &gain * &h;
    let covariance = &ikh * p * ikh.transpose() + &gain * &model.noise * gain.transpose();
    let mut out = GaussianState { mean, covariance };
    out.symmetrize();
    out.wrap_angles(angle_states);
    Ok((out, UpdateOutcome::Applied(innov)))
}

/// Iterated EKF update: relinearizes the measurement about the running
/// estimate until the step falls below `tol` or `max_iterations` is reached.
///
/// The gate is applied to the prior innovation, exactly as in
/// [`update_gated`]. With one iteration the result equals [`update_gated`].
/// Any analytic Jacobian in `model` is ignored.
pub fn update_iterated<H>(
    state: &GaussianState,
    z: &DVector<f64>,
    model: &MeasurementModel<H>,
    gate: Option<f64>,
    angle_states: &[usize],
    max_iterations: usize,
    tol: f64,
) -> Result<(GaussianState, UpdateOutcome)>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    let (innov, mut h) = innovation(state, z, model)?;
    if let Some(k) = gate {
        if innov.max_normalized() > k {
            return Ok((state.clone(), UpdateOutcome::Gated(innov)));
        }
    }
    let p = &state.covariance;
    let mut x = state.mean.clone();
    let mut gain;
    let mut iteration = 0;
    loop {
        let s = &h * p * h.transpose() + &model.noise;
        let s = (&s + s.transpose()) * 0.5;
        let s_inv = match s.cholesky() {
            Some(c) => c.inverse(),
            None if iteration == 0 => return Ok((state.clone(), UpdateOutcome::Singular)),
            None => break,
        };
        gain = p * h.transpose() * s_inv;
        let mut residual = z - (model.predict_measurement)(&x);
        for &i in &model.angle_components {
            residual[i] = wrap(residual[i]);
        }
        let mut offset = &state.mean - &x;
        for &i in angle_states {
            offset[i] = wrap(offset[i]);
        }
        let mut next = &state.mean + &gain * (residual - &h * &offset);
        check_finite(&next, "update")?;
        for &i in angle_states {
            next[i] = wrap(next[i]);
        }
        let mut step = &next - &x;
        for &i in angle_states {
            step[i] = wrap(step[i]);
        }
        x = next;
        iteration += 1;
        if iteration >= max_iterations.max(1) || step.amax() < tol {
            let n = state.dim();
            let ikh = DMatrix::identity(n, n) - &gain * &h;
            let covariance = &ikh * p * ikh.transpose() + &gain * &model.noise * gain.transpose();
            let mut out = GaussianState { mean: x, covariance };
            out.symmetrize();
            out.wrap_angles(angle_states);
            return Ok((out, UpdateOutcome::Applied(innov)));
        }
        h = numeric_jacobian(&model.predict_measurement, &x, default_step, &model.angle_components)?;
    }
    update_gated(state, z, model, gate, angle_states)
}

/// Ungated [`update_gated`] without angle components.
pub fn update<H>(
    state: &GaussianState,
    z: &DVector<f64>,
    model: &MeasurementModel<H>,
) -> Result<(GaussianState, UpdateOutcome)>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    update_gated(state, z, model, None, &[])
}

/// A Gaussian state together with the indices of its circular components.
#[derive(Debug, Clone, PartialEq)]
pub struct Ekf {
    pub state: GaussianState,
    angle_states: Vec<usize>,
}

impl Ekf {
    pub fn new(state: GaussianState, angle_states: Vec<usize>) -> Self {
        Self {
            state,
            angle_states,
        }
    }

    pub fn angle_states(&self) -> &[usize] {
        &self.angle_states
    }

    pub fn predict<F>(&mut self, transition: F, q: &DMatrix<f64>) -> Result<()>
    where
        F: Fn(&DVector<f64>) -> DVector<f64>,
    {
        self.state = predict_with(&self.state, transition, None, q, &self.angle_states)?;
        Ok(())
    }

    pub fn predict_linear<F>(&mut self, transition: F, jacobian: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<()>
    where
        F: Fn(&DVector<f64>) -> DVector<f64>,
    {
        self.state = predict_with(&self.state, transition, Some(jacobian), q, &self.angle_states)?;
        Ok(())
    }

    pub fn update<H>(
        &mut self,
        z: &DVector<f64>,
        model: &MeasurementModel<H>,
        gate: Option<f64>,
    ) -> Result<UpdateOutcome>
    where
        H: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let (next, outcome) = update_gated(&self.state, z, model, gate, &self.angle_states)?;
        self.state = next;
        Ok(outcome)
    }

    /// [`update_iterated`] applied in place.
    pub fn update_iterated<H>(
        &mut self,
        z: &DVector<f64>,
        model: &MeasurementModel<H>,
        gate: Option<f64>,
        max_iterations: usize,
        tol: f64,
    ) -> Result<UpdateOutcome>
    where
        H: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let (next, outcome) = update_iterated(&self.state, z, model, gate, &self.angle_states, max_iterations, tol)?;
        self.state = next;
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{nav_to_body, EulerAngles};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn scalar(x: f64, p: f64) -> GaussianState {
        GaussianState::from_diagonal(&[x], &[p])
    }

    #[test]
    fn identity_predict_is_noop() {
        let s = GaussianState::from_diagonal(&[1.0, -2.0], &[0.3, 0.7]);
        let q = DMatrix::zeros(2, 2);
        let out = predict(&s, |x| x.clone(), &q).unwrap();
        assert_abs_diff_eq!(out.mean, s.mean, epsilon = 1e-15);
        assert_abs_diff_eq!(out.covariance, s.covariance, epsilon = 1e-9);
    }

    #[test]
    fn scalar_riccati() {
        let out = predict(&scalar(1.0, 1.0), |x| x * 2.0, &DMatrix::zeros(1, 1)).unwrap();
        assert_abs_diff_eq!(out.mean[0], 2.0);
        assert_abs_diff_eq!(out.covariance[(0, 0)], 4.0, epsilon = 1e-8);
        assert!(out.is_symmetric(1e-10) && out.is_psd());
    }

    #[test]
    fn non_finite_transition_is_divergence() {
        let r = predict(&scalar(1.0, 1.0), |x| x.map(|v| v / 0.0), &DMatrix::zeros(1, 1));
        assert!(matches!(r, Err(Error::Divergence(_))));
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let s = scalar(0.5, 1.0);
        let model = MeasurementModel::new(|x: &DVector<f64>| x.clone(), DMatrix::from_element(1, 1, 1.0));
        let (out, outcome) = update(&s, &DVector::from_element(1, 0.5), &model).unwrap();
        assert!(outcome.is_applied());
        assert_eq!(out.mean[0], 0.5);
        assert!(out.covariance[(0, 0)] < 1.0);
    }

    #[test]
    fn scalar_kalman() {
        let model = MeasurementModel::new(|x: &DVector<f64>| x.clone(), DMatrix::from_element(1, 1, 1.0));
        let (out, _) = update(&scalar(0.0, 1.0), &DVector::from_element(1, 2.0), &model).unwrap();
        assert_abs_diff_eq!(out.mean[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.covariance[(0, 0)], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn uninformative_measurement() {
        let model = MeasurementModel::new(|x: &DVector<f64>| x.clone(), DMatrix::from_element(1, 1, 1e12));
        let (out, _) = update(&scalar(0.0, 1.0), &DVector::from_element(1, 2.0), &model).unwrap();
        assert_abs_diff_eq!(out.mean[0], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn singular_innovation_is_flagged() {
        let s = GaussianState::from_diagonal(&[0.0], &[0.0]);
        let model = MeasurementModel::new(|x: &DVector<f64>| x.clone(), DMatrix::zeros(1, 1));
        let (out, outcome) = update(&s, &DVector::from_element(1, 1.0), &model).unwrap();
        assert_eq!(outcome, UpdateOutcome::Singular);
        assert_eq!(out, s);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let model = MeasurementModel::new(|x: &DVector<f64>| x.clone(), DMatrix::identity(1, 1));
        assert!(update(&scalar(0.0, 1.0), &DVector::zeros(2), &model).is_err());
    }

    #[test]
    fn gate_rejects_outlier() {
        let model = MeasurementModel::new(|x: &DVector<f64>| x.clone(), DMatrix::from_element(1, 1, 1.0));
        let s = scalar(0.0, 0.0);
        let (out, outcome) =
            update_gated(&s, &DVector::from_element(1, 6.5), &model, Some(6.0), &[]).unwrap();
        assert!(matches!(outcome, UpdateOutcome::Gated(_)));
        assert_eq!(out, s);
        let (_, outcome) =
            update_gated(&s, &DVector::from_element(1, 5.5), &model, Some(6.0), &[]).unwrap();
        assert!(outcome.is_applied());
    }

    #[test]
    fn angle_states_and_residuals_wrap() {
        let mut ekf = Ekf::new(GaussianState::from_diagonal(&[3.1], &[0.1]), vec![0]);
        ekf.predict(|x| x.add_scalar(0.1), &DMatrix::from_element(1, 1, 1e-4))
            .unwrap();
        assert!(ekf.state.mean[0] < -3.0);
        // F stays 1 across the seam
        assert_abs_diff_eq!(ekf.state.covariance[(0, 0)], 0.1 + 1e-4, epsilon = 1e-8);
        // measurement at +3.13 vs state near -3.08: short way round is small
        let model = MeasurementModel::new(|x: &DVector<f64>| x.clone(), DMatrix::from_element(1, 1, 0.1))
            .with_angle_components(vec![0]);
        let before = ekf.state.mean[0];
        let outcome = ekf.update(&DVector::from_element(1, 3.13), &model, None).unwrap();
        let nu = outcome.innovation().unwrap().residual[0];
        assert!(nu.abs() < 0.2, "residual {nu}");
        assert!(ekf.state.mean[0] < before || ekf.state.mean[0] > 3.0);
        assert!(ekf.state.mean[0] >= -PI && ekf.state.mean[0] < PI);
    }

    #[test]
    fn jacobian_examples() {
        let x = DVector::from_vec(vec![3.0, 1.0]);
        let j = numeric_jacobian(|x| x.clone(), &x, default_step, &[]).unwrap();
        assert_abs_diff_eq!(j, DMatrix::identity(2, 2), epsilon = 1e-9);
        let j = numeric_jacobian(
            |x| DVector::from_vec(vec![x[0] * x[0], x[1]]),
            &x,
            default_step,
            &[],
        )
        .unwrap();
        assert_abs_diff_eq!(j, DMatrix::from_row_slice(2, 2, &[6.0, 0.0, 0.0, 1.0]), epsilon = 1e-6);
    }

    #[test]
    fn jacobian_of_rotation_matches_analytic() {
        // d/dψ of T^b_n · v at (0.1, 0.2, 0.3), differentiated by hand
        let (phi, theta, psi) = (0.1f64, 0.2f64, 0.3f64);
        let v = nalgebra::Vector3::new(1.0, -2.0, 0.5);
        let f = |x: &DVector<f64>| {
            let m = nav_to_body(&EulerAngles::new(x[0], x[1], x[2]));
            DVector::from_column_slice((m * v).as_slice())
        };
        let j = numeric_jacobian(f, &DVector::from_vec(vec![phi, theta, psi]), default_step, &[]).unwrap();
        let (sx, cx) = phi.sin_cos();
        let (sy, cy) = theta.sin_cos();
        let (sz, cz) = psi.sin_cos();
        let dpsi = nalgebra::Matrix3::new(
            -cy * sz,
            cy * cz,
            0.0,
            -sx * sy * sz - cx * cz,
            sx * sy * cz - cx * sz,
            0.0,
            -cx * sy * sz + sx * cz,
            cx * sy * cz + sx * sz,
            0.0,
        ) * v;
        let dphi = nalgebra::Matrix3::new(
            0.0,
            0.0,
            0.0,
            cx * sy * cz + sx * sz,
            cx * sy * sz - sx * cz,
            cx * cy,
            -sx * sy * cz + cx * sz,
            -sx * sy * sz - cx * cz,
            -sx * cy,
        ) * v;
        let dtheta = nalgebra::Matrix3::new(
            -sy * cz,
            -sy * sz,
            -cy,
            sx * cy * cz,
            sx * cy * sz,
            -sx * sy,
            cx * cy * cz,
            cx * cy * sz,
            -cx * sy,
        ) * v;
        for r in 0..3 {
            assert_abs_diff_eq!(j[(r, 0)], dphi[r], epsilon = 1e-5);
            assert_abs_diff_eq!(j[(r, 1)], dtheta[r], epsilon = 1e-5);
            assert_abs_diff_eq!(j[(r, 2)], dpsi[r], epsilon = 1e-5);
        }
    }

    #[test]
    fn single_iteration_is_plain_update() {
        let model = MeasurementModel::new(
            |x: &DVector<f64>| DVector::from_vec(vec![x[0].sin(), x[0].cos() + x[1]]),
            DMatrix::identity(2, 2) * 0.01,
        );
        let s = GaussianState::from_diagonal(&[0.3, -0.1], &[0.5, 0.2]);
        let z = DVector::from_vec(vec![0.9, 0.4]);
        let (a, _) = update_gated(&s, &z, &model, None, &[0]).unwrap();
        let (b, _) = update_iterated(&s, &z, &model, None, &[0], 1, 0.0).unwrap();
        assert_abs_diff_eq!(a.mean, b.mean, epsilon = 1e-15);
        assert_abs_diff_eq!(a.covariance, b.covariance, epsilon = 1e-15);
    }

    #[test]
    fn iteration_resolves_strong_nonlinearity() {
        // Bearing-like measurement far from a vague prior: one linearization
        // stops short, relinearizing lands on the measured angle.
        let model = MeasurementModel::new(
            |x: &DVector<f64>| DVector::from_vec(vec![x[0].cos(), x[0].sin()]),
            DMatrix::identity(2, 2) * 1e-6,
        );
        let s = GaussianState::from_diagonal(&[0.0], &[3.0]);
        let z = DVector::from_vec(vec![1.3f64.cos(), 1.3f64.sin()]);
        let (plain, _) = update_gated(&s, &z, &model, None, &[0]).unwrap();
        let (iter, _) = update_iterated(&s, &z, &model, None, &[0], 20, 1e-12).unwrap();
        assert!((plain.mean[0] - 1.3).abs() > 0.2);
        assert_abs_diff_eq!(iter.mean[0], 1.3, epsilon = 1e-4);
        assert!(iter.is_psd());
    }

    #[test]
    fn iterated_gate_uses_prior_innovation() {
        let model = MeasurementModel::new(|x: &DVector<f64>| x.clone(), DMatrix::from_element(1, 1, 1.0));
        let s = scalar(0.0, 0.0);
        let (out, outcome) = update_iterated(&s, &DVector::from_element(1, 6.5), &model, Some(6.0), &[], 5, 1e-12).unwrap();
        assert!(matches!(outcome, UpdateOutcome::Gated(_)));
        assert_eq!(out, s);
    }
}
