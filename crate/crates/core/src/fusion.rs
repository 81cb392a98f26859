//! Closed-form fusion of radar radial velocity, optical flow and LiDAR range.
//!
//! Frames: `B` is the camera at the earlier observation `p`, `A` the camera at
//! the later observation `q`. With `R = ᴮ_ᴬR` (rotation taking A-frame
//! vectors into B) and normalized image coordinates `(u_p, v_p)` of `p`:
//!
//! ```text
//! | R₁ − u_p·R₃ |          | (ᴮq₁ − u_p·ᴮq₃) / Δt |
//! | R₂ − v_p·R₃ | · ᴬṁ  =  | (ᴮq₂ − v_p·ᴮq₃) / Δt |
//! |     ᴬr̂ᵀ     |          |          ṙ           |
//! ```
//!
//! The first two rows state that `p = q − Δt·R·ᴬṁ` lies on the ray of the
//! earlier pixel; the third that the velocity's radial component is the
//! radar measurement.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector2, Vector3};
use num_traits::Float;

use crate::camera::{check_rotation, CameraModel, Projection};
use crate::cloud::{PointCloud, PointStatus, VelocityPoint, VelocityPointCloud};
use crate::error::{Error, Result};
use crate::velcube::{query_radial_velocity, ContextWindow, RadialLookup, VelocityCube};

/// Dense per-pixel displacement from frame t to t+1, pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    flow: Vec<Vector2<f64>>,
    covered: Vec<bool>,
    dt: f64,
}

impl FlowField {
    /// Row-major `(row, column)` storage. Uncovered pixels are reset to zero flow.
    pub fn new(width: usize, height: usize, mut flow: Vec<Vector2<f64>>, covered: Vec<bool>, dt: f64) -> Result<Self> {
        let n = width * height;
        if flow.len() != n || covered.len() != n {
            return Err(Error::Shape {
                what: "flow field",
                expected: alloc::vec![height, width],
                actual: alloc::vec![flow.len(), covered.len()],
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("flow dt must be > 0, got {dt}")));
        }
        for (f, c) in flow.iter_mut().zip(&covered) {
            if !*c {
                *f = Vector2::zeros();
            } else if !(f.x.is_finite() && f.y.is_finite()) {
                return Err(Error::Config("flow contains non-finite values".into()));
            }
        }
        Ok(Self { width, height, flow, covered, dt })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn flow(&self) -> &[Vector2<f64>] {
        &self.flow
    }

    pub fn covered(&self) -> &[bool] {
        &self.covered
    }

    /// Nearest-pixel lookup; `None` outside the image or on uncovered pixels.
    pub fn lookup(&self, u: f64, v: f64) -> Option<Vector2<f64>> {
        let col = Float::round(u);
        let row = Float::round(v);
        if !(col >= 0.0 && row >= 0.0 && col < self.width as f64 && row < self.height as f64) {
            return None;
        }
        let i = row as usize * self.width + col as usize;
        self.covered[i].then_some(self.flow[i])
    }
}

/// Camera pose change between the two flow frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePair {
    rotation_a_to_b: Matrix3<f64>,
    dt: f64,
}

impl FramePair {
    pub fn new(rotation_a_to_b: Matrix3<f64>, dt: f64) -> Result<Self> {
        check_rotation(&rotation_a_to_b, "frame-pair rotation")?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("frame-pair dt must be > 0, got {dt}")));
        }
        Ok(Self { rotation_a_to_b, dt })
    }

    /// Static rig.
    pub fn stationary(dt: f64) -> Result<Self> {
        Self::new(Matrix3::identity(), dt)
    }

    pub fn rotation_a_to_b(&self) -> &Matrix3<f64> {
        &self.rotation_a_to_b
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    pub window: ContextWindow,
    /// Systems with 2-norm condition number at or above this are rejected.
    pub cond_bound: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self { window: ContextWindow::default(), cond_bound: 1e6 }
    }
}

/// 2-norm condition number `σ_max / σ_min`.
pub fn condition_number(m: &Matrix3<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn system_matrix(p_norm: &Vector2<f64>, r_hat: &Vector3<f64>, rot: &Matrix3<f64>) -> Matrix3<f64> {
    let r1 = rot.row(0);
    let r2 = rot.row(1);
    let r3 = rot.row(2);
    let row1 = r1 - r3 * p_norm.x;
    let row2 = r2 - r3 * p_norm.y;
    Matrix3::from_rows(&[row1, row2, r_hat.transpose()])
}

/// Solves for the A-frame velocity of the point observed at `q_b` (later
/// position expressed in B), given the earlier normalized image point
/// `p_norm`, the A-frame radar direction `r_hat` and radial velocity `r_dot`.
pub fn solve_full_velocity(
    p_norm: &Vector2<f64>,
    q_b: &Vector3<f64>,
    r_hat: &Vector3<f64>,
    r_dot: f64,
    pair: &FramePair,
    cond_bound: f64,
) -> Result<Vector3<f64>> {
    let norm = r_hat.norm();
    if !(Float::abs(norm - 1.0) <= 1e-9) {
        return Err(Error::NonUnitDirection(norm));
    }
    let m = system_matrix(p_norm, r_hat, &pair.rotation_a_to_b);
    let cond = condition_number(&m);
    if !(cond < cond_bound) {
        return Err(Error::DegenerateGeometry(cond));
    }
    let rhs = Vector3::new(
        (q_b.x - p_norm.x * q_b.z) / pair.dt,
        (q_b.y - p_norm.y * q_b.z) / pair.dt,
        r_dot,
    );
    m.lu().solve(&rhs).ok_or(Error::DegenerateGeometry(f64::INFINITY))
}

/// Checks run once per frame before any point is processed.
pub fn check_frame_inputs(
    vc: &VelocityCube,
    flow: &FlowField,
    camera: &CameraModel,
    pair: &FramePair,
    params: &FusionParams,
) -> Result<()> {
    vc.config().validate()?;
    camera.validate()?;
    params.window.validate()?;
    if flow.width() != camera.width || flow.height() != camera.height {
        return Err(Error::Shape {
            what: "flow field vs camera",
            expected: alloc::vec![camera.height, camera.width],
            actual: alloc::vec![flow.height(), flow.width()],
        });
    }
    if Float::abs(flow.dt() - pair.dt()) > 1e-9 * pair.dt() {
        return Err(Error::Config(format!("flow dt {} does not match frame-pair dt {}", flow.dt(), pair.dt())));
    }
    if !(params.cond_bound > 1.0) {
        return Err(Error::Config(format!("cond_bound must be > 1, got {}", params.cond_bound)));
    }
    Ok(())
}

/// Estimates one LiDAR point (radar frame, observed at the later frame).
/// Inputs are assumed to have passed [`check_frame_inputs`].
pub fn estimate_point(
    point: &Vector3<f64>,
    vc: &VelocityCube,
    flow: &FlowField,
    camera: &CameraModel,
    pair: &FramePair,
    params: &FusionParams,
) -> VelocityPoint {
    let r_dot = match query_radial_velocity(vc, point, &params.window) {
        RadialLookup::Found { velocity, .. } => velocity,
        RadialLookup::NoReturn => return VelocityPoint::failed(*point, PointStatus::NoRadarReturn),
        RadialLookup::OutOfFov => return VelocityPoint::failed(*point, PointStatus::OutOfRadarFov),
    };

    let extrinsic = camera.rotation();
    let q_a = extrinsic * point + camera.extrinsic_translation;
    let Projection::InFront { u, v, .. } = camera.project_camera_point(&q_a) else {
        return VelocityPoint::failed(*point, PointStatus::OutOfCamera);
    };
    let Some(f) = flow.lookup(u, v) else {
        return VelocityPoint::failed(*point, PointStatus::OutOfCamera);
    };
    let p_norm = camera.normalize(u - f.x, v - f.y);
    let q_b = pair.rotation_a_to_b * q_a;
    let r_hat = extrinsic * point.normalize();

    match solve_full_velocity(&p_norm, &q_b, &r_hat, r_dot, pair, params.cond_bound) {
        Ok(velocity_a) => VelocityPoint::ok(*point, extrinsic.transpose() * velocity_a),
        Err(_) => VelocityPoint::failed(*point, PointStatus::DegenerateGeometry),
    }
}

/// Per-point 3D velocities in the radar frame. Output order and length match
/// `cloud`.
pub fn estimate_frame(
    cloud: &PointCloud,
    vc: &VelocityCube,
    flow: &FlowField,
    camera: &CameraModel,
    pair: &FramePair,
    params: &FusionParams,
) -> Result<VelocityPointCloud> {
    check_frame_inputs(vc, flow, camera, pair, params)?;
    let points = cloud
        .points
        .iter()
        .map(|p| estimate_point(p, vc, flow, camera, pair, params))
        .collect();
    Ok(VelocityPointCloud { points })
}
