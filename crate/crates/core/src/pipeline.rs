//! Three-stage estimator: attitude, wheel states, then velocity and position.
//!
//! Every chassis epoch runs, in order:
//!
//! 1. wheel predict from the wheel gyros, attitude predict from the chassis gyro,
//! 2. attitude update from the chassis accelerometer,
//! 3. wheel update from the wheel accelerometers,
//! 4. velocity predict from the fused, compensated wheel accelerometers,
//! 5. velocity update from the wheel gyros,
//! 6. position integration with the current attitude.
//!
//! Steps 1-3 for the attitude and wheel stages read only measurements and
//! the previous velocity, so their relative order does not change results.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ImuSample, Recording};
use crate::error::{Error, Result};
use crate::geo::{body_to_nav, nav_to_body, EulerAngles, Mat3, Vec3};
use crate::kinematics::{forward_kinematics, Side, WheelCommandState, WheelGeometry};
use crate::ori::{euler_rate_matrix, leveling_mean, level_from_accel, OriEkf, OriParams, STANDARD_GRAVITY};
use crate::pos::{compensate_wheel_accel, fuse_wheel_accels, fusion_weight, linear_and_forward_accel, PosEkf, PosParams};
use crate::sim::NoiseSpec;
use crate::wheel::{WheelBank, WheelParams, WheelState};

/// Pose of the chassis IMU in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChassisMount {
    /// Lever arm, metres. Recorded for completeness; readings are not
    /// lever-arm compensated.
    #[serde(default)]
    pub position: [f64; 3],
    /// Roll, pitch, yaw of the IMU axes relative to the body axes, rad.
    #[serde(default)]
    pub euler: [f64; 3],
}

impl ChassisMount {
    /// Rotation taking IMU-frame vectors into the body frame.
    pub fn imu_to_body(&self) -> Mat3 {
        body_to_nav(&EulerAngles::new(self.euler[0], self.euler[1], self.euler[2]))
    }

    pub fn is_identity(&self) -> bool {
        self.euler == [0.0; 3]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleConfig {
    pub wheels: Vec<WheelGeometry>,
    /// Stream identifiers, parallel to `wheels`.
    pub wheel_ids: Vec<String>,
    #[serde(default)]
    pub chassis_mount: ChassisMount,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// Overrides the wheel subset chosen by the mode.
    #[serde(default)]
    pub active_wheels: Option<Vec<usize>>,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

pub const WHEELBASE: f64 = 2.62;
pub const TRACK: f64 = 1.46;
pub const ROLLING_RADIUS: f64 = 0.295;

impl Default for VehicleConfig {
    /// Four wheels, front pair steerable, body origin at the rear-axle midpoint.
    fn default() -> Self {
        let h = TRACK / 2.0;
        let w = |x: f64, y: f64, side, steer| WheelGeometry::new(Vec3::new(x, y, 0.0), ROLLING_RADIUS, side, steer);
        Self {
            wheels: vec![
                w(WHEELBASE, -h, Side::Left, true),
                w(WHEELBASE, h, Side::Right, true),
                w(0.0, -h, Side::Left, false),
                w(0.0, h, Side::Right, false),
            ],
            wheel_ids: ["fl", "fr", "rl", "rr"].map(String::from).to_vec(),
            chassis_mount: ChassisMount::default(),
            gravity: STANDARD_GRAVITY,
            active_wheels: None,
        }
    }
}

impl VehicleConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("vehicle config serializes")
    }

    /// Geometry and ids taken from the wheel streams of a recording.
    pub fn from_recording(rec: &Recording) -> Self {
        Self {
            wheels: rec.wheel_geometries(),
            wheel_ids: rec.wheels.iter().map(|w| w.id.clone()).collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.wheels.len() != self.wheel_ids.len() {
            return Err(Error::Config(format!(
                "{} wheels but {} wheel ids",
                self.wheels.len(),
                self.wheel_ids.len()
            )));
        }
        for w in &self.wheels {
            w.validate()?;
        }
        if !(self.gravity > 0.0) {
            return Err(Error::Config("gravity must be positive".into()));
        }
        if let Some(a) = &self.active_wheels {
            if let Some(&i) = a.iter().find(|&&i| i >= self.wheels.len()) {
                return Err(Error::Config(format!("active wheel {i} does not exist")));
            }
        }
        Ok(())
    }
}

/// Number of wheel IMUs used by the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    TwoWheel,
    FourWheel,
}

impl Mode {
    pub fn wheel_count(self) -> usize {
        match self {
            Mode::TwoWheel => 2,
            Mode::FourWheel => 4,
        }
    }
}

/// Wheel indices for `mode`: the fixed pair for two wheels, all for four,
/// or the configured override.
pub fn select_wheels(config: &VehicleConfig, mode: Mode) -> Result<Vec<usize>> {
    let need = mode.wheel_count();
    if let Some(a) = &config.active_wheels {
        if a.len() < 2 || a.iter().any(|&i| i >= config.wheels.len()) {
            return Err(Error::Config(format!("invalid active wheel list {a:?}")));
        }
        return Ok(a.clone());
    }
    if config.wheels.len() < need {
        return Err(Error::Config(format!(
            "mode needs {need} wheels, vehicle has {}",
            config.wheels.len()
        )));
    }
    match mode {
        Mode::FourWheel => Ok((0..config.wheels.len()).collect()),
        Mode::TwoWheel => {
            let fixed: Vec<usize> = (0..config.wheels.len()).filter(|&i| !config.wheels[i].steerable).collect();
            if fixed.len() < 2 {
                return Err(Error::Config("two-wheel mode needs two non-steerable wheels".into()));
            }
            Ok(fixed[..2].to_vec())
        }
    }
}

/// Relative order of the attitude and wheel stages within an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageOrder {
    #[default]
    WheelFirst,
    AttitudeFirst,
}

/// Body velocity used by the attitude update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttitudeVelocity {
    /// Previous-epoch estimate of the velocity filter.
    #[default]
    Estimated,
    /// No-skid odometry from the raw gyros of the fixed wheels. Keeps the
    /// attitude stage independent of the wheel and velocity filters.
    Odometry,
    /// Zero velocity.
    Zero,
}

/// Wheels whose gyros correct the velocity filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityUpdateWheels {
    /// Every active wheel.
    #[default]
    All,
    /// Only non-steerable wheels, falling back to all when there are none.
    /// Steerable wheels observe lateral velocity only through `sin β`, so a
    /// small steering error lets wheel-gyro noise leak into `v_y`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    /// Sensor noise the filters are tuned for.
    pub noise: NoiseSpec,
    pub order: StageOrder,
    pub attitude_velocity: AttitudeVelocity,
    /// When false the wheel filters run on gyro prediction alone.
    pub wheel_accel_updates: bool,
    pub velocity_update: VelocityUpdateWheels,
    /// One stacked wheel filter instead of one per wheel.
    pub joint_wheel_filter: bool,
    pub vertical_velocity_prior: bool,
    /// Leveling window at the start of the recording, seconds.
    pub leveling_window: f64,
    pub initial_yaw: f64,
    /// Largest wheel/chassis timestamp mismatch accepted, seconds.
    pub sync_tolerance: f64,
    /// Keeps the wheel states of every epoch in the solution.
    pub record_wheel_states: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            noise: NoiseSpec::tactical_grade(0),
            order: StageOrder::default(),
            attitude_velocity: AttitudeVelocity::default(),
            wheel_accel_updates: true,
            velocity_update: VelocityUpdateWheels::default(),
            joint_wheel_filter: false,
            vertical_velocity_prior: false,
            leveling_window: 2.0,
            initial_yaw: 0.0,
            sync_tolerance: 2e-3,
            record_wheel_states: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavSample {
    pub t: f64,
    pub position: Vec3,
    pub velocity_body: Vec3,
    /// Always `T^n_b · velocity_body`.
    pub velocity_nav: Vec3,
    pub euler: EulerAngles,
    /// Heading rate, rad/s.
    pub yaw_rate: f64,
}

impl NavSample {
    pub fn new(t: f64, position: Vec3, velocity_body: Vec3, euler: EulerAngles, yaw_rate: f64) -> Self {
        Self {
            t,
            position,
            velocity_body,
            velocity_nav: body_to_nav(&euler) * velocity_body,
            euler,
            yaw_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub attitude_gated: usize,
    pub pitch_saturations: usize,
    /// Per active wheel.
    pub wheel_gated: Vec<usize>,
    /// Per active wheel, gyro blocks rejected by the velocity update.
    pub velocity_gated: Vec<usize>,
    /// Epochs where every wheel failed the gate and all were used.
    pub velocity_forced: usize,
    pub vertical_priors: usize,
    /// Largest normalized attitude innovation seen.
    pub max_attitude_innovation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NavSolution {
    pub samples: Vec<NavSample>,
    pub diagnostics: Diagnostics,
    /// Ids of the wheels that were used.
    pub wheel_ids: Vec<String>,
    /// Per epoch, only when requested.
    pub wheel_states: Vec<Vec<WheelState>>,
}

impl NavSolution {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&NavSample> {
        self.samples.last()
    }
}

/// For each chassis epoch, the nearest sample index of `stream`.
pub fn synchronize(chassis: &[ImuSample], stream: &[ImuSample], name: &str, tolerance: f64) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(chassis.len());
    let mut j = 0;
    for c in chassis {
        while j + 1 < stream.len() && (stream[j + 1].t - c.t).abs() <= (stream[j].t - c.t).abs() {
            j += 1;
        }
        match stream.get(j) {
            Some(s) if (s.t - c.t).abs() <= tolerance => out.push(j),
            _ => {
                return Err(Error::Unsynchronized {
                    stream: name.to_string(),
                    t: c.t,
                })
            }
        }
    }
    Ok(out)
}

/// Chassis samples expressed in the body frame.
fn chassis_in_body(rec: &Recording, mount: &ChassisMount) -> Vec<ImuSample> {
    if mount.is_identity() {
        return rec.chassis.clone();
    }
    let c = mount.imu_to_body();
    rec.chassis
        .iter()
        .map(|s| ImuSample::new(s.t, c * s.gyro, c * s.accel))
        .collect()
}

fn check_monotonic(name: &str, s: &[ImuSample]) -> Result<()> {
    match s.windows(2).position(|w| !(w[1].t > w[0].t)) {
        Some(i) => Err(Error::NonMonotonic {
            file: name.into(),
            row: i + 2,
        }),
        None => Ok(()),
    }
}

/// Initial attitude from the mean specific force of the first `window` seconds.
pub fn initial_attitude(chassis: &[ImuSample], window: f64, yaw: f64) -> EulerAngles {
    let mean = leveling_mean(chassis.iter().map(|s| (s.t, &s.accel)), window);
    let level = mean.map(|m| level_from_accel(&m)).unwrap_or_else(EulerAngles::level);
    EulerAngles::new(level.roll, level.pitch, yaw)
}

/// Planar odometry velocity from the axial gyros of fixed wheels.
fn odometry_velocity(gyros: &[Vec3], geoms: &[WheelGeometry]) -> Option<Vec3> {
    let (g, w): (Vec<WheelGeometry>, Vec<WheelCommandState>) = geoms
        .iter()
        .zip(gyros)
        .filter(|(g, _)| !g.steerable)
        .map(|(g, y)| (g.clone(), WheelCommandState::new(g.side_sign() * y.z, 0.0)))
        .unzip();
    if g.len() < 2 {
        return None;
    }
    forward_kinematics(&g, &w).ok().map(|p| Vec3::new(p.vx, p.vy, 0.0))
}

/// Runs the estimator over a whole recording.
pub fn run_wichins(rec: &Recording, config: &VehicleConfig, mode: Mode, options: &PipelineOptions) -> Result<NavSolution> {
    config.validate()?;
    let active = select_wheels(config, mode)?;
    let geoms: Vec<WheelGeometry> = active.iter().map(|&i| config.wheels[i].clone()).collect();
    let ids: Vec<String> = active.iter().map(|&i| config.wheel_ids[i].clone()).collect();

    let streams = ids
        .iter()
        .map(|id| {
            rec.wheels
                .iter()
                .find(|w| &w.id == id)
                .map(|w| w.samples.as_slice())
                .ok_or_else(|| Error::MissingStream(format!("wheel '{id}'")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut solution = NavSolution {
        wheel_ids: ids.clone(),
        ..NavSolution::default()
    };
    if rec.chassis.is_empty() {
        return Ok(solution);
    }
    let chassis = chassis_in_body(rec, &config.chassis_mount);
    check_monotonic("chassis", &chassis)?;
    for (id, s) in ids.iter().zip(&streams) {
        check_monotonic(id, s)?;
    }
    let sync = ids
        .iter()
        .zip(&streams)
        .map(|(id, s)| synchronize(&chassis, s, id, options.sync_tolerance))
        .collect::<Result<Vec<_>>>()?;

    let rate = rec.imu_rate_hz;
    let g = config.gravity;
    let noise = &options.noise;
    let ori_params = OriParams {
        gravity: g,
        ..OriParams::from_noise(noise, rate)
    };
    let wheel_params = WheelParams::from_noise(noise, rate);
    let pos_params = PosParams {
        gravity: g,
        vertical_velocity_prior: options.vertical_velocity_prior,
        ..PosParams::from_noise(noise, rate)
    };
    let update_wheels: Vec<usize> = match options.velocity_update {
        VelocityUpdateWheels::Fixed if geoms.iter().any(|g| !g.steerable) => {
            (0..geoms.len()).filter(|&i| !geoms[i].steerable).collect()
        }
        _ => (0..geoms.len()).collect(),
    };
    let accel_weights: Vec<f64> = geoms.iter().map(|_| fusion_weight(wheel_params.accel_noise.max(1e-12))).collect();

    let mut ori = OriEkf::new(initial_attitude(&chassis, options.leveling_window, options.initial_yaw), ori_params);
    let mut wheels = if options.joint_wheel_filter {
        WheelBank::joint(&geoms, &wheel_params)
    } else {
        WheelBank::independent(&geoms, &wheel_params)
    };
    let mut pos = PosEkf::new(pos_params, geoms.len());
    let n = geoms.len();

    let push = |sol: &mut NavSolution, t: f64, ori: &OriEkf, pos: &PosEkf, omega: &Vec3, wheels: &WheelBank| {
        let e = ori.euler();
        let yaw_rate = (euler_rate_matrix(e.roll, e.pitch) * omega).z;
        sol.samples.push(NavSample::new(t, pos.position(), pos.velocity(), e, yaw_rate));
        if options.record_wheel_states {
            sol.wheel_states.push(wheels.states());
        }
    };
    push(&mut solution, chassis[0].t, &ori, &pos, &chassis[0].gyro, &wheels);

    let mut gyros = vec![Vec3::zeros(); n];
    let mut accels = vec![Vec3::zeros(); n];
    for k in 1..chassis.len() {
        let c = &chassis[k];
        let dt = c.t - chassis[k - 1].t;
        for i in 0..n {
            let s = &streams[i][sync[i][k]];
            gyros[i] = s.gyro;
            accels[i] = s.accel;
        }
        let omega = c.gyro;
        let f_body = c.accel;

        let v_att = match options.attitude_velocity {
            AttitudeVelocity::Estimated => pos.velocity(),
            AttitudeVelocity::Odometry => odometry_velocity(&gyros, &geoms).unwrap_or_else(|| pos.velocity()),
            AttitudeVelocity::Zero => Vec3::zeros(),
        };
        let attitude_stage = |ori: &mut OriEkf, diag: &mut Diagnostics| -> Result<()> {
            ori.predict(&omega, dt)?;
            let out = ori.update(&f_body, &omega, &v_att)?;
            if let Some(i) = out.innovation() {
                diag.max_attitude_innovation = diag.max_attitude_innovation.max(i.max_normalized());
            }
            Ok(())
        };
        let wheel_stage = |wheels: &mut WheelBank| -> Result<()> {
            wheels.predict(&gyros, omega.z, dt)?;
            if options.wheel_accel_updates {
                wheels.update(&accels, &f_body, &omega)?;
            }
            Ok(())
        };
        match options.order {
            StageOrder::WheelFirst => {
                wheel_stage(&mut wheels)?;
                attitude_stage(&mut ori, &mut solution.diagnostics)?;
            }
            StageOrder::AttitudeFirst => {
                attitude_stage(&mut ori, &mut solution.diagnostics)?;
                wheel_stage(&mut wheels)?;
            }
        }

        let euler = ori.euler();
        let states = wheels.states();
        let compensated: Vec<Vec3> = (0..n)
            .map(|i| compensate_wheel_accel(&accels[i], gyros[i].z, &states[i], &omega, &geoms[i]))
            .collect();
        let fused = fuse_wheel_accels(&compensated, &accel_weights)?;
        let (_, a_fwd) = linear_and_forward_accel(&fused, &euler, g);
        pos.predict(&a_fwd, n, dt)?;
        let upd = pos.update_with(&gyros, &omega, &states, &geoms, &update_wheels)?;
        if upd.forced {
            solution.diagnostics.velocity_forced += 1;
        }
        if pos.vertical_prior(dt)? {
            solution.diagnostics.vertical_priors += 1;
        }
        pos.integrate(&euler, dt);
        if !pos.position().iter().all(|x| x.is_finite()) {
            return Err(Error::Divergence(format!("position at t = {}", c.t)));
        }
        push(&mut solution, c.t, &ori, &pos, &omega, &wheels);
    }

    let d = &mut solution.diagnostics;
    d.attitude_gated = ori.gated_count();
    d.pitch_saturations = ori.saturation_count();
    d.wheel_gated = wheels.gated_counts();
    d.velocity_gated = pos.gated_counts().to_vec();
    Ok(solution)
}

/// Nav-frame velocity implied by a body velocity and attitude.
pub fn velocity_nav(euler: &EulerAngles, v_body: &Vec3) -> Vec3 {
    nav_to_body(euler).transpose() * v_body
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::WheelStream;
    use crate::sim::{scenarios, simulate, TrajectorySpec};

    fn rec_with(ts: &[f64]) -> Vec<ImuSample> {
        ts.iter().map(|&t| ImuSample::new(t, Vec3::zeros(), Vec3::zeros())).collect()
    }

    #[test]
    fn wheel_selection() {
        let cfg = VehicleConfig::default();
        assert_eq!(select_wheels(&cfg, Mode::TwoWheel).unwrap(), vec![2, 3]);
        assert_eq!(select_wheels(&cfg, Mode::FourWheel).unwrap(), vec![0, 1, 2, 3]);
        let o = VehicleConfig {
            active_wheels: Some(vec![0, 1]),
            ..VehicleConfig::default()
        };
        assert_eq!(select_wheels(&o, Mode::TwoWheel).unwrap(), vec![0, 1]);
        let small = VehicleConfig {
            wheels: cfg.wheels[2..].to_vec(),
            wheel_ids: cfg.wheel_ids[2..].to_vec(),
            ..VehicleConfig::default()
        };
        assert!(select_wheels(&small, Mode::FourWheel).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = VehicleConfig::default();
        let back = VehicleConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn nearest_epoch_sync() {
        let c = rec_with(&[0.0, 0.01, 0.02]);
        let s = rec_with(&[0.0005, 0.0101, 0.0215]);
        assert_eq!(synchronize(&c, &s, "w", 2e-3).unwrap(), vec![0, 1, 2]);
        let s = rec_with(&[0.0, 0.013, 0.02]);
        assert!(matches!(synchronize(&c, &s, "w", 2e-3), Err(Error::Unsynchronized { .. })));
    }

    #[test]
    fn empty_recording_gives_empty_solution() {
        let cfg = VehicleConfig::default();
        let rec = Recording {
            imu_rate_hz: 120.0,
            gt_rate_hz: 5.0,
            chassis: Vec::new(),
            wheels: cfg
                .wheel_ids
                .iter()
                .zip(&cfg.wheels)
                .map(|(id, g)| WheelStream {
                    id: id.clone(),
                    geometry: g.clone(),
                    samples: Vec::new(),
                })
                .collect(),
            ground_truth: Vec::new(),
        };
        let sol = run_wichins(&rec, &cfg, Mode::TwoWheel, &PipelineOptions::default()).unwrap();
        assert!(sol.is_empty());
    }

    #[test]
    fn missing_stream_is_reported() {
        let sim = simulate(&scenarios::clean(TrajectorySpec::new(120.0, 0.0).hold(1.0))).unwrap();
        let mut rec = sim.recording;
        rec.wheels.retain(|w| w.id != "rr");
        let err = run_wichins(&rec, &VehicleConfig::default(), Mode::TwoWheel, &PipelineOptions::default());
        assert!(matches!(err, Err(Error::MissingStream(_))));
    }

    #[test]
    fn straight_hundred_metres() {
        let traj = TrajectorySpec::new(120.0, 0.0).hold(3.0).speed(5.0, 1e-6).straight(20.0);
        let sim = simulate(&scenarios::clean(traj)).unwrap();
        let sol = run_wichins(&sim.recording, &VehicleConfig::default(), Mode::TwoWheel, &PipelineOptions::default()).unwrap();
        assert_eq!(sol.len(), sim.recording.chassis.len());
        let end = sol.last().unwrap().position;
        assert!((end - Vec3::new(100.0, 0.0, 0.0)).norm() < 0.5, "end {end}");
        for s in &sol.samples {
            assert!((s.velocity_nav - body_to_nav(&s.euler) * s.velocity_body).norm() < 1e-12);
        }
    }

    #[test]
    fn stage_order_does_not_matter() {
        let sim = simulate(&scenarios::noisy(TrajectorySpec::new(120.0, 0.0).hold(3.0).speed(4.0, 3.0).turn(15.0, 1.0, 1.0), 3)).unwrap();
        let cfg = VehicleConfig::default();
        let a = run_wichins(&sim.recording, &cfg, Mode::FourWheel, &PipelineOptions::default()).unwrap();
        let b = run_wichins(
            &sim.recording,
            &cfg,
            Mode::FourWheel,
            &PipelineOptions {
                order: StageOrder::AttitudeFirst,
                ..PipelineOptions::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
