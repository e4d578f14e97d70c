//! Dead reckoning for wheeled vehicles from one chassis IMU and IMUs mounted
//! on the wheels.
//!
//! The estimator runs three small extended Kalman filters per epoch: attitude
//! from the chassis IMU, phase and steering of every wheel from its own
//! IMU, and body velocity plus position from the wheel sensors through
//! no-skid kinematics. Baseline methods, a sensor simulator, recording I/O
//! and error metrics complete the toolkit.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod ekf;
pub mod error;
pub mod eval;
pub mod geo;
pub mod kinematics;
pub mod ori;
pub mod pipeline;
pub mod pos;
pub mod sim;
pub mod wheel;

pub use error::{Error, ErrorClass, Result};
pub use geo::{EulerAngles, Mat3, Vec3};
pub use pipeline::{run_wichins, Mode, NavSample, NavSolution, PipelineOptions, VehicleConfig};
