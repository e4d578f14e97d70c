//! Ready-made trajectories and vehicles.
//!
//! Every scenario starts with a stationary interval long enough for sensor
//! calibration and leveling.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{NoiseSpec, SimVehicle, SimulationSpec, TrajectorySpec};
use crate::kinematics::WheelGeometry;
use crate::pipeline::VehicleConfig;

pub const RATE_HZ: f64 = 120.0;

/// Stationary lead-in, seconds.
pub const LEAD_IN: f64 = 6.0;

/// 120 s: lead-in, acceleration to 10 m/s, then straight.
pub fn straight() -> TrajectorySpec {
    TrajectorySpec::new(RATE_HZ, 0.0)
        .hold(LEAD_IN)
        .speed(10.0, 8.0)
        .straight(120.0 - LEAD_IN - 8.0)
}

/// 120 s: lead-in, acceleration to 5 m/s, then circling at radius 20 m.
pub fn circle() -> TrajectorySpec {
    let (speed, radius, ramp) = (5.0, 20.0, 1.0);
    let turn_time = 120.0 - LEAD_IN - 4.0;
    let angle = speed / radius * (turn_time - ramp);
    TrajectorySpec::new(RATE_HZ, 0.0)
        .hold(LEAD_IN)
        .speed(speed, 4.0)
        .turn(radius, angle, ramp)
}

/// 120 s: alternating full right and left loops of radius 15 m at 6 m/s.
pub fn figure_eight() -> TrajectorySpec {
    let (speed, radius, ramp) = (6.0, 15.0, 1.0);
    let loop_time = ramp + TAU * radius / speed;
    let budget = 120.0 - LEAD_IN - 4.0;
    let loops = (budget / loop_time).floor() as usize;
    let mut spec = TrajectorySpec::new(RATE_HZ, 0.0).hold(LEAD_IN).speed(speed, 4.0);
    for i in 0..loops {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        spec = spec.turn(radius, sign * TAU, ramp);
    }
    spec.straight(budget - loops as f64 * loop_time)
}

/// Town drive of roughly 500 m in 140 s with stops, turns of several radii
/// and speeds up to 8 m/s. The initial heading is not north.
pub fn urban_loop() -> TrajectorySpec {
    TrajectorySpec::new(RATE_HZ, 0.6)
        .hold(10.0)
        .speed(5.0, 5.0)
        .straight(7.0)
        .turn(20.0, FRAC_PI_2, 1.5)
        .speed(7.0, 4.0)
        .straight(9.0)
        .speed(4.0, 3.0)
        .turn(12.0, -FRAC_PI_2, 1.0)
        .straight(10.0)
        .turn(10.0, -FRAC_PI_2, 1.0)
        .speed(6.0, 3.0)
        .straight(6.0)
        .turn(25.0, PI, 2.0)
        .speed(2.0, 4.0)
        .straight(3.0)
        .speed(0.0, 2.0)
        .hold(10.0)
        .speed(4.0, 4.0)
        .turn(10.0, FRAC_PI_2, 1.0)
        .speed(6.0, 3.0)
        .straight(8.0)
        .speed(0.0, 5.0)
        .hold(6.0)
}

/// Known rolling radii and zero wheel phase.
pub fn nominal_vehicle() -> SimVehicle {
    SimVehicle::nominal(VehicleConfig::default().wheels)
}

/// Tyre imperfections for noisy desk studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TyreModel {
    /// Standard deviation of the radius error shared by all tyres.
    pub common_sigma: f64,
    /// Standard deviation of the per-tyre radius error.
    pub individual_sigma: f64,
}

impl Default for TyreModel {
    fn default() -> Self {
        Self {
            common_sigma: 2e-3,
            individual_sigma: 3e-4,
        }
    }
}

/// Vehicle with seeded radius errors and random initial wheel phases.
pub fn imperfect_vehicle(seed: u64, tyres: TyreModel) -> SimVehicle {
    imperfect_wheels(VehicleConfig::default().wheels, seed, tyres)
}

/// `wheels` with seeded radius errors and random initial phases.
pub fn imperfect_wheels(wheels: Vec<WheelGeometry>, seed: u64, tyres: TyreModel) -> SimVehicle {
    let mut rng = NoiseSpec::tactical_grade(seed).rng(1000);
    let common = Normal::new(0.0, tyres.common_sigma).expect("finite sigma").sample(&mut rng);
    let each = Normal::new(0.0, tyres.individual_sigma).expect("finite sigma");
    let radius_scale = wheels.iter().map(|_| 1.0 + common + each.sample(&mut rng)).collect();
    let initial_phase = wheels.iter().map(|_| rng.random_range(-PI..PI)).collect();
    SimVehicle {
        wheels,
        radius_scale,
        initial_phase,
    }
}

/// Noise-free recording of `trajectory` with the nominal vehicle.
pub fn clean(trajectory: TrajectorySpec) -> SimulationSpec {
    SimulationSpec::new(trajectory, nominal_vehicle())
}

/// Tactical-grade noise and imperfect tyres, all drawn from `seed`.
pub fn noisy(trajectory: TrajectorySpec, seed: u64) -> SimulationSpec {
    SimulationSpec::new(trajectory, imperfect_vehicle(seed, TyreModel::default()))
        .with_noise(NoiseSpec::tactical_grade(seed))
}

/// Looks up a scenario by its command-line name.
pub fn by_name(name: &str) -> Option<TrajectorySpec> {
    match name {
        "straight" => Some(straight()),
        "circle" => Some(circle()),
        "figure-eight" | "figure_eight" => Some(figure_eight()),
        "urban" | "urban-loop" | "urban_loop" => Some(urban_loop()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["straight", "circle", "figure-eight", "urban"];
