#![allow(dead_code)]

use wichins::dataset::Recording;
use wichins::sim::{scenarios, simulate, TrajectorySpec};

/// Short drive: lead-in, launch, a curve and a straight.
pub fn short_drive() -> TrajectorySpec {
    TrajectorySpec::new(120.0, 0.3).hold(6.0).speed(6.0, 4.0).turn(25.0, 1.2, 1.0).straight(6.0)
}

pub fn noisy_recording(seed: u64) -> Recording {
    simulate(&scenarios::noisy(short_drive(), seed)).unwrap().recording
}

pub fn clean_recording() -> Recording {
    simulate(&scenarios::clean(short_drive())).unwrap().recording
}
