//! Point-wise 3D velocity estimation from FMCW radar, camera optical flow and
//! LiDAR positions.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure algorithms:
//!
//! - [`sim`]: synthetic FMCW scenes with exact LiDAR, flow and ground truth.
//! - [`cube`]: windowed FFT chain from raw ADC samples to the 4D radar cube,
//!   plus relative-intensity thresholding.
//! - [`velcube`]: Doppler collapse into the velocity cube and context-window
//!   radial velocity queries.
//! - [`fusion`]: closed-form combination of radial velocity, optical flow and
//!   LiDAR range into full 3D velocities.
//! - [`metrics`]: clustering, object tracks, AVE / AVAE evaluation.
//!
//! File formats and the command line live in the companion `pointvel` crate.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is the NaN-rejecting validation idiom used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod camera;
pub mod cloud;
pub mod cube;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod sim;
pub mod velcube;

pub use camera::{CameraModel, Projection};
pub use cloud::{PointCloud, PointStatus, VelocityPoint, VelocityPointCloud};
pub use cube::{build_radar_cube, threshold_cube, AdcCube, RadarConfig, RadarCube};
pub use error::{Error, Result};
pub use fusion::{estimate_frame, solve_full_velocity, FlowField, FramePair, FusionParams};
pub use metrics::{MetricsReport, ObjectTrack};
pub use sim::{Scatterer, SceneConfig};
pub use velcube::{collapse_doppler, query_radial_velocity, ContextWindow, RadialLookup, VelocityCube};

pub use nalgebra::{Matrix3, Vector2, Vector3};
pub use num_complex::{Complex32, Complex64};
