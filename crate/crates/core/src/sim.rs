//! Ground-truth trajectories and synthetic chassis and wheel IMU streams.
//!
//! Trajectories are planar. Speed and path curvature vary linearly inside
//! each segment, so heading is a closed-form cubic and position is integrated
//! by Gauss-Legendre quadrature. The body origin sits at the rear-axle
//! midpoint, so the body velocity is `(s, 0, 0)` and rear wheels roll without
//! side slip. Front wheels follow Ackermann steering.
//!
//! Sensor readings come from rigid-body kinematics written against
//! `nalgebra::Rotation3` and do not reuse the filter measurement models.

pub mod scenarios;

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroundTruthSample, ImuSample, Recording, WheelStream};
use crate::error::{Error, Result};
use crate::geo::{EulerAngles, Vec3};
use crate::kinematics::WheelGeometry;
use crate::ori::STANDARD_GRAVITY;

const DEG: f64 = std::f64::consts::PI / 180.0;

/// White noise densities and constant bias magnitudes of one IMU model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// rad/s/√Hz
    pub gyro_density: f64,
    /// m/s²/√Hz
    pub accel_density: f64,
    /// rad/s
    pub gyro_bias: f64,
    /// m/s²
    pub accel_bias: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// 0.007 °/s/√Hz, 120 µg/√Hz, 10 °/h, 0.03 mg.
    pub fn tactical_grade(seed: u64) -> Self {
        Self {
            gyro_density: 0.007 * DEG,
            accel_density: 120e-6 * STANDARD_GRAVITY,
            gyro_bias: 10.0 * DEG / 3600.0,
            accel_bias: 0.03e-3 * STANDARD_GRAVITY,
            seed,
        }
    }

    pub fn silent(seed: u64) -> Self {
        Self {
            gyro_density: 0.0,
            accel_density: 0.0,
            gyro_bias: 0.0,
            accel_bias: 0.0,
            seed,
        }
    }

    /// Per-sample gyro standard deviation at `rate_hz`.
    pub fn gyro_sigma(&self, rate_hz: f64) -> f64 {
        self.gyro_density * rate_hz.sqrt()
    }

    pub fn accel_sigma(&self, rate_hz: f64) -> f64 {
        self.accel_density * rate_hz.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.gyro_density, self.accel_density, self.gyro_bias, self.accel_bias];
        if v.iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidSpec("noise magnitudes must be finite and non-negative".into()))
        }
    }

    /// Independent generator for sensor `stream`.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Adds a constant random-sign bias and white noise to a clean stream.
pub struct ImuNoise {
    rng: ChaCha8Rng,
    gyro_bias: Vec3,
    accel_bias: Vec3,
    gyro_sigma: f64,
    accel_sigma: f64,
}

impl ImuNoise {
    pub fn new(spec: &NoiseSpec, stream: u64, rate_hz: f64) -> Self {
        let mut rng = spec.rng(stream);
        let sign = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
        let gyro_bias = Vec3::new(sign(&mut rng), sign(&mut rng), sign(&mut rng)) * spec.gyro_bias;
        let accel_bias = Vec3::new(sign(&mut rng), sign(&mut rng), sign(&mut rng)) * spec.accel_bias;
        Self {
            rng,
            gyro_bias,
            accel_bias,
            gyro_sigma: spec.gyro_sigma(rate_hz),
            accel_sigma: spec.accel_sigma(rate_hz),
        }
    }

    pub fn gyro_bias(&self) -> Vec3 {
        self.gyro_bias
    }

    pub fn accel_bias(&self) -> Vec3 {
        self.accel_bias
    }

    fn white(&mut self, sigma: f64) -> Vec3 {
        let mut d = || self.rng.sample::<f64, _>(StandardNormal) * sigma;
        Vec3::new(d(), d(), d())
    }

    pub fn corrupt(&mut self, gyro: &Vec3, accel: &Vec3) -> (Vec3, Vec3) {
        let g = gyro + self.gyro_bias + self.white(self.gyro_sigma);
        let a = accel + self.accel_bias + self.white(self.accel_sigma);
        (g, a)
    }
}

/// Authoring unit for trajectories. Positive turn angles are clockwise seen
/// from above (rightward in a north-east-down frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Maneuver {
    /// Stand still; requires zero speed.
    Hold { duration: f64 },
    /// Linear speed change at constant curvature.
    Speed { target: f64, duration: f64 },
    /// Constant speed, zero curvature.
    Straight { duration: f64 },
    /// Curvature ramps to `1/radius`, holds, and ramps back to zero, turning by
    /// `angle` radians at constant speed.
    Turn { radius: f64, angle: f64, transition: f64 },
}

/// Piece with linearly varying speed and curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub end_speed: f64,
    pub end_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default)]
    pub initial_yaw: f64,
    pub maneuvers: Vec<Maneuver>,
}

fn default_rate() -> f64 {
    120.0
}

impl TrajectorySpec {
    pub fn new(rate_hz: f64, initial_yaw: f64) -> Self {
        Self {
            rate_hz,
            initial_yaw,
            maneuvers: Vec::new(),
        }
    }

    pub fn hold(mut self, duration: f64) -> Self {
        self.maneuvers.push(Maneuver::Hold { duration });
        self
    }

    pub fn speed(mut self, target: f64, duration: f64) -> Self {
        self.maneuvers.push(Maneuver::Speed { target, duration });
        self
    }

    pub fn straight(mut self, duration: f64) -> Self {
        self.maneuvers.push(Maneuver::Straight { duration });
        self
    }

    pub fn turn(mut self, radius: f64, angle: f64, transition: f64) -> Self {
        self.maneuvers.push(Maneuver::Turn {
            radius,
            angle,
            transition,
        });
        self
    }

    /// Lowers the maneuvers to primitive segments, checking continuity.
    pub fn segments(&self) -> Result<Vec<Segment>> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::InvalidSpec(format!("sample rate {} Hz", self.rate_hz)));
        }
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        let positive = |d: f64| d > 0.0 && d.is_finite();
        let mut out = Vec::new();
        let (mut speed, mut curv) = (0.0f64, 0.0f64);
        for (i, m) in self.maneuvers.iter().enumerate() {
            match *m {
                Maneuver::Hold { duration } => {
                    if !positive(duration) {
                        return bad(&format!("maneuver {i}: duration must be positive"));
                    }
                    if speed != 0.0 {
                        return bad(&format!("maneuver {i}: hold entered at speed {speed}"));
                    }
                    out.push(Segment { duration, end_speed: 0.0, end_curvature: curv });
                }
                Maneuver::Speed { target, duration } => {
                    if !positive(duration) || !(target >= 0.0 && target.is_finite()) {
                        return bad(&format!("maneuver {i}: speed change needs target >= 0 and positive duration"));
                    }
                    speed = target;
                    out.push(Segment { duration, end_speed: speed, end_curvature: curv });
                }
                Maneuver::Straight { duration } => {
                    if !positive(duration) {
                        return bad(&format!("maneuver {i}: duration must be positive"));
                    }
                    if curv != 0.0 {
                        return bad(&format!("maneuver {i}: straight entered with curvature {curv}"));
                    }
                    out.push(Segment { duration, end_speed: speed, end_curvature: 0.0 });
                }
                Maneuver::Turn { radius, angle, transition } => {
                    if !positive(radius) || !positive(transition) || !angle.is_finite() || angle == 0.0 {
                        return bad(&format!("maneuver {i}: turn needs positive radius and transition, nonzero angle"));
                    }
                    if !(speed > 0.0) {
                        return bad(&format!("maneuver {i}: turn requires motion"));
                    }
                    if curv != 0.0 {
                        return bad(&format!("maneuver {i}: turn entered with curvature {curv}"));
                    }
                    let k = angle.signum() / radius;
                    let ramps = speed * k.abs() * transition;
                    let hold = (angle.abs() - ramps) / (speed * k.abs());
                    if hold < 0.0 {
                        return bad(&format!("maneuver {i}: turn angle too small for the transition"));
                    }
                    out.push(Segment { duration: transition, end_speed: speed, end_curvature: k });
                    if hold > 0.0 {
                        out.push(Segment { duration: hold, end_speed: speed, end_curvature: k });
                    }
                    out.push(Segment { duration: transition, end_speed: speed, end_curvature: 0.0 });
                    curv = 0.0;
                }
            }
        }
        Ok(out)
    }

    pub fn duration(&self) -> Result<f64> {
        Ok(self.segments()?.iter().map(|s| s.duration).sum())
    }
}

/// Speed, curvature, their rates and heading at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PathState {
    s: f64,
    s_dot: f64,
    k: f64,
    k_dot: f64,
    psi: f64,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    t0: f64,
    duration: f64,
    s0: f64,
    a: f64,
    k0: f64,
    b: f64,
    psi0: f64,
}

impl Piece {
    fn eval(&self, t: f64) -> PathState {
        let u = (t - self.t0).clamp(0.0, self.duration);
        let (s0, a, k0, b) = (self.s0, self.a, self.k0, self.b);
        let (s_dot, k_dot) = if t > self.t0 + self.duration { (0.0, 0.0) } else { (a, b) };
        PathState {
            s: s0 + a * u,
            s_dot,
            k: k0 + b * u,
            k_dot,
            psi: self.psi0 + s0 * k0 * u + 0.5 * (s0 * b + a * k0) * u * u + a * b * u * u * u / 3.0,
        }
    }
}

/// Compiled trajectory that can be sampled at any time.
#[derive(Debug, Clone)]
pub struct Path {
    pieces: Vec<Piece>,
    total: f64,
}

impl Path {
    pub fn new(spec: &TrajectorySpec) -> Result<Self> {
        let mut pieces = Vec::new();
        let (mut t, mut s, mut k, mut psi) = (0.0, 0.0, 0.0, spec.initial_yaw);
        for seg in spec.segments()? {
            let p = Piece {
                t0: t,
                duration: seg.duration,
                s0: s,
                a: (seg.end_speed - s) / seg.duration,
                k0: k,
                b: (seg.end_curvature - k) / seg.duration,
                psi0: psi,
            };
            psi = p.eval(t + seg.duration).psi;
            pieces.push(p);
            t += seg.duration;
            s = seg.end_speed;
            k = seg.end_curvature;
        }
        if pieces.is_empty() {
            return Err(Error::InvalidSpec("trajectory has no maneuvers".into()));
        }
        Ok(Self { pieces, total: t })
    }

    pub fn duration(&self) -> f64 {
        self.total
    }

    fn piece_index(&self, t: f64) -> usize {
        let i = self.pieces.partition_point(|p| p.t0 <= t);
        i.saturating_sub(1)
    }

    fn at(&self, t: f64) -> PathState {
        self.pieces[self.piece_index(t)].eval(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.t0).chain([self.total]).collect()
    }
}

const GL_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Composite three-point Gauss-Legendre over `[a, b]`, split at `breaks`.
fn quadrature<T, F>(f: F, a: f64, b: f64, breaks: &[f64], zero: T) -> T
where
    F: Fn(f64) -> T,
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Copy,
{
    let mut knots = vec![a];
    knots.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    knots.push(b);
    let mut sum = zero;
    for w in knots.windows(2) {
        const SUB: usize = 2;
        let h = (w[1] - w[0]) / SUB as f64;
        for j in 0..SUB {
            let lo = w[0] + h * j as f64;
            let mid = lo + 0.5 * h;
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                sum = sum + f(mid + 0.5 * h * x) * (0.5 * h * wt);
            }
        }
    }
    sum
}

/// Chassis kinematics at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyTruth {
    pub t: f64,
    pub position: Vec3,
    pub velocity_nav: Vec3,
    pub euler: EulerAngles,
    /// Body angular rate, rad/s.
    pub omega: Vec3,
    pub omega_dot: Vec3,
    /// Body-frame velocity of the body origin.
    pub velocity_body: Vec3,
    /// Time derivative of the body-frame velocity coordinates.
    pub velocity_body_rate: Vec3,
}

impl BodyTruth {
    /// Inertial acceleration of the body origin in body coordinates.
    pub fn accel_body(&self) -> Vec3 {
        self.velocity_body_rate + self.omega.cross(&self.velocity_body)
    }
}

/// Wheel kinematics at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelTruth {
    /// Physical spin rate about the axle, rad/s.
    pub rotation_speed: f64,
    pub rotation_accel: f64,
    pub phase: f64,
    pub steering_angle: f64,
    pub steering_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSample {
    pub body: BodyTruth,
    pub wheels: Vec<WheelTruth>,
}

/// Samples the trajectory at `rate_hz` from zero to its end.
pub fn generate_ground_truth(spec: &TrajectorySpec) -> Result<Vec<BodyTruth>> {
    let path = Path::new(spec)?;
    let n = (path.duration() * spec.rate_hz + 1e-9).floor() as usize;
    let breaks = path.breakpoints();
    let mut out = Vec::with_capacity(n + 1);
    let mut r = Vec3::zeros();
    let mut t_prev = 0.0;
    for k in 0..=n {
        let t = k as f64 / spec.rate_hz;
        if k > 0 {
            r += quadrature(
                |tau| {
                    let p = path.at(tau);
                    Vec3::new(p.s * p.psi.cos(), p.s * p.psi.sin(), 0.0)
                },
                t_prev,
                t,
                &breaks,
                Vec3::zeros(),
            );
        }
        t_prev = t;
        out.push(body_truth(&path, t, r));
    }
    Ok(out)
}

fn body_truth(path: &Path, t: f64, position: Vec3) -> BodyTruth {
    let p = path.at(t);
    let yaw_rate = p.s * p.k;
    BodyTruth {
        t,
        position,
        velocity_nav: Vec3::new(p.s * p.psi.cos(), p.s * p.psi.sin(), 0.0),
        euler: EulerAngles::new(0.0, 0.0, crate::geo::wrap(p.psi)),
        omega: Vec3::new(0.0, 0.0, yaw_rate),
        omega_dot: Vec3::new(0.0, 0.0, p.s_dot * p.k + p.s * p.k_dot),
        velocity_body: Vec3::new(p.s, 0.0, 0.0),
        velocity_body_rate: Vec3::new(p.s_dot, 0.0, 0.0),
    }
}

/// Interval of wheel slip: the spin rate is scaled by `1 + slip`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkidEvent {
    pub wheel: usize,
    pub start: f64,
    pub end: f64,
    pub slip: f64,
}

impl SkidEvent {
    fn factor(&self, wheel: usize, t: f64) -> f64 {
        if wheel == self.wheel && t >= self.start && t < self.end {
            1.0 + self.slip
        } else {
            1.0
        }
    }
}

/// Steering angle, its rate, hub speed scale and its rate for a wheel at
/// `hub` on a path of curvature `k` changing at `k_dot`.
fn ackermann(hub: &Vec3, k: f64, k_dot: f64, steerable: bool) -> (f64, f64, f64, f64) {
    let d = (1.0 - k * hub.y, k * hub.x);
    let dd = (-k_dot * hub.y, k_dot * hub.x);
    let n2 = d.0 * d.0 + d.1 * d.1;
    let n = n2.sqrt();
    if steerable {
        let beta = d.1.atan2(d.0);
        let beta_rate = (d.0 * dd.1 - d.1 * dd.0) / n2;
        (beta, beta_rate, n, (d.0 * dd.0 + d.1 * dd.1) / n)
    } else {
        // fixed wheels roll along body x
        (0.0, 0.0, d.0, dd.0)
    }
}

fn wheel_rates(path: &Path, geom: &WheelGeometry, radius: f64, t: f64) -> WheelTruth {
    let p = path.at(t);
    let (beta, beta_rate, scale, scale_rate) = ackermann(&geom.hub(), p.k, p.k_dot, geom.steerable);
    WheelTruth {
        rotation_speed: p.s * scale / radius,
        rotation_accel: (p.s_dot * scale + p.s * scale_rate) / radius,
        phase: 0.0,
        steering_angle: beta,
        steering_rate: beta_rate,
    }
}

/// Vehicle as simulated: nominal geometry plus true rolling radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimVehicle {
    pub wheels: Vec<WheelGeometry>,
    /// True rolling radius divided by nominal, per wheel.
    #[serde(default)]
    pub radius_scale: Vec<f64>,
    /// Wheel phase at time zero, per wheel.
    #[serde(default)]
    pub initial_phase: Vec<f64>,
}

impl SimVehicle {
    pub fn nominal(wheels: Vec<WheelGeometry>) -> Self {
        Self {
            wheels,
            radius_scale: Vec::new(),
            initial_phase: Vec::new(),
        }
    }

    fn true_radius(&self, i: usize) -> f64 {
        self.wheels[i].rolling_radius * self.radius_scale.get(i).copied().unwrap_or(1.0)
    }
}

/// Per-wheel truth series aligned with `body`.
pub fn generate_wheel_truth(
    spec: &TrajectorySpec,
    body: &[BodyTruth],
    vehicle: &SimVehicle,
    skids: &[SkidEvent],
) -> Result<Vec<Vec<WheelTruth>>> {
    let path = Path::new(spec)?;
    let mut breaks = path.breakpoints();
    for s in skids {
        breaks.extend([s.start, s.end]);
    }
    breaks.sort_by(f64::total_cmp);
    let mut all = Vec::with_capacity(vehicle.wheels.len());
    for (i, geom) in vehicle.wheels.iter().enumerate() {
        let radius = vehicle.true_radius(i);
        let spin = |t: f64| {
            let factor: f64 = skids.iter().map(|s| s.factor(i, t)).product();
            wheel_rates(&path, geom, radius, t).rotation_speed * factor
        };
        let mut phase = vehicle.initial_phase.get(i).copied().unwrap_or(0.0);
        let mut series = Vec::with_capacity(body.len());
        let mut t_prev = 0.0;
        for b in body {
            if b.t > 0.0 {
                phase += quadrature(spin, t_prev, b.t, &breaks, 0.0);
            }
            t_prev = b.t;
            let factor: f64 = skids.iter().map(|s| s.factor(i, b.t)).product();
            let mut w = wheel_rates(&path, geom, radius, b.t);
            w.rotation_speed *= factor;
            w.rotation_accel *= factor;
            w.phase = crate::geo::wrap(phase);
            series.push(w);
        }
        all.push(series);
    }
    Ok(all)
}

fn nav_to_body_rotation(e: &EulerAngles) -> Matrix3<f64> {
    let z = Rotation3::from_axis_angle(&Vector3::z_axis(), e.yaw);
    let y = Rotation3::from_axis_angle(&Vector3::y_axis(), e.pitch);
    let x = Rotation3::from_axis_angle(&Vector3::x_axis(), e.roll);
    (z * y * x).inverse().into_inner()
}

/// Rotation taking wheel-frame coordinates to body coordinates: steer about
/// body z, fixed mounting, then spin `σα` about the axle.
pub fn wheel_orientation(phase: f64, steering: f64, side: f64) -> Matrix3<f64> {
    let steer = Rotation3::from_axis_angle(&Vector3::z_axis(), steering);
    let mount = Matrix3::from_columns(&[
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 0.0, side),
        Vector3::new(0.0, -side, 0.0),
    ]);
    let spin = Rotation3::from_axis_angle(&Vector3::z_axis(), side * phase);
    steer.matrix() * mount * spin.matrix()
}

/// Noise-free chassis gyro and accelerometer readings.
pub fn chassis_reading(b: &BodyTruth, g: f64) -> (Vec3, Vec3) {
    let gravity_body = nav_to_body_rotation(&b.euler) * Vector3::new(0.0, 0.0, g);
    (b.omega, b.accel_body() - gravity_body)
}

/// Noise-free wheel gyro and accelerometer readings.
pub fn wheel_reading(b: &BodyTruth, w: &WheelTruth, geom: &WheelGeometry, g: f64) -> (Vec3, Vec3) {
    let side = geom.side_sign();
    let rot = wheel_orientation(w.phase, w.steering_angle, side);
    let to_wheel = rot.transpose();
    let r = geom.hub();
    let gyro = to_wheel * (b.omega + Vector3::new(0.0, 0.0, w.steering_rate))
        + Vector3::new(0.0, 0.0, side * w.rotation_speed);
    let (_, f_body) = chassis_reading(b, g);
    let hub = f_body + b.omega_dot.cross(&r) + b.omega.cross(&b.omega.cross(&r));
    let rho = geom.sensor_offset;
    let accel = to_wheel * hub
        + Vector3::new(-rho * w.rotation_speed.powi(2), side * rho * w.rotation_accel, 0.0);
    (gyro, accel)
}

/// Everything needed to synthesize one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub trajectory: TrajectorySpec,
    pub vehicle: SimVehicle,
    #[serde(default)]
    pub wheel_ids: Vec<String>,
    /// `None` produces clean streams.
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub skids: Vec<SkidEvent>,
    #[serde(default = "default_gt_rate")]
    pub gt_rate_hz: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_gt_rate() -> f64 {
    5.0
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

impl SimulationSpec {
    pub fn new(trajectory: TrajectorySpec, vehicle: SimVehicle) -> Self {
        Self {
            trajectory,
            vehicle,
            wheel_ids: Vec::new(),
            noise: None,
            skids: Vec::new(),
            gt_rate_hz: default_gt_rate(),
            gravity: default_gravity(),
        }
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_skid(mut self, skid: SkidEvent) -> Self {
        self.skids.push(skid);
        self
    }

    fn ids(&self) -> Vec<String> {
        let default = ["fl", "fr", "rl", "rr"];
        (0..self.vehicle.wheels.len())
            .map(|i| {
                self.wheel_ids
                    .get(i)
                    .cloned()
                    .or_else(|| (self.vehicle.wheels.len() == 4).then(|| default[i].to_string()))
                    .unwrap_or_else(|| format!("w{i}"))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        for w in &self.vehicle.wheels {
            w.validate().map_err(|e| Error::InvalidSpec(e.to_string()))?;
        }
        for s in &self.skids {
            if s.wheel >= self.vehicle.wheels.len() || !(s.end > s.start) || !(s.slip > -1.0) {
                return Err(Error::InvalidSpec(format!("bad skid event {s:?}")));
            }
        }
        if !(self.gt_rate_hz > 0.0) {
            return Err(Error::InvalidSpec("ground-truth rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub recording: Recording,
    pub truth: Vec<TruthSample>,
}

/// Synthesizes chassis and wheel streams plus 5 Hz ground truth.
pub fn simulate(spec: &SimulationSpec) -> Result<Simulation> {
    spec.validate()?;
    let rate = spec.trajectory.rate_hz;
    let body = generate_ground_truth(&spec.trajectory)?;
    let wheels = generate_wheel_truth(&spec.trajectory, &body, &spec.vehicle, &spec.skids)?;
    let g = spec.gravity;

    let mut chassis_noise = spec.noise.map(|n| ImuNoise::new(&n, 0, rate));
    let mut chassis = Vec::with_capacity(body.len());
    for b in &body {
        let (w, f) = chassis_reading(b, g);
        let (w, f) = match chassis_noise.as_mut() {
            Some(n) => n.corrupt(&w, &f),
            None => (w, f),
        };
        chassis.push(ImuSample::new(b.t, w, f));
    }

    let ids = spec.ids();
    let mut streams = Vec::with_capacity(wheels.len());
    for (i, (geom, series)) in spec.vehicle.wheels.iter().zip(&wheels).enumerate() {
        let mut noise = spec.noise.map(|n| ImuNoise::new(&n, 1 + i as u64, rate));
        let samples = body
            .iter()
            .zip(series)
            .map(|(b, w)| {
                let (gy, ac) = wheel_reading(b, w, geom, g);
                let (gy, ac) = match noise.as_mut() {
                    Some(n) => n.corrupt(&gy, &ac),
                    None => (gy, ac),
                };
                ImuSample::new(b.t, gy, ac)
            })
            .collect();
        streams.push(WheelStream {
            id: ids[i].clone(),
            geometry: geom.clone(),
            samples,
        });
    }

    let stride = (rate / spec.gt_rate_hz).round().max(1.0) as usize;
    let ground_truth = body
        .iter()
        .step_by(stride)
        .map(|b| GroundTruthSample {
            t: b.t,
            position: b.position,
            velocity: b.velocity_nav,
        })
        .collect();

    let truth = body
        .into_iter()
        .enumerate()
        .map(|(k, b)| TruthSample {
            body: b,
            wheels: wheels.iter().map(|w| w[k]).collect(),
        })
        .collect();

    Ok(Simulation {
        recording: Recording {
            imu_rate_hz: rate,
            gt_rate_hz: rate / stride as f64,
            chassis,
            wheels: streams,
            ground_truth,
        },
        truth,
    })
}
