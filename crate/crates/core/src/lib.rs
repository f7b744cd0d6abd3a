//! Fusing a fiducial-marker gripper demonstration with an IMU into a per-task
//! 6-DoF trajectory: stream ingestion, multi-camera calibration refinement,
//! an error-state EKF, demonstration segmentation, a scenario simulator and
//! trajectory evaluation.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, which is what the I/O layer and pipeline use.

pub mod error;
pub mod geom;
pub mod scalar;
pub mod streams;
pub mod markerloc;
pub mod ekf;
pub mod calib;
pub mod segment;
pub mod sim;
pub mod eval;
pub mod baseline;
pub mod pipeline;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Quat = geom::Quat<f64>;
pub type Pose = geom::Pose<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type FilterState = ekf::FilterState<f64>;
pub type PoseObservation = markerloc::PoseObservation<f64>;

pub type Quatf32 = geom::Quat<f32>;
pub type Posef32 = geom::Pose<f32>;
pub type FilterStatef32 = ekf::FilterState<f32>;
