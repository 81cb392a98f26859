use alloc::format;

use nalgebra::{Matrix3, Vector2, Vector3};
use num_traits::Float;

use crate::error::{Error, Result};

/// Pinhole camera with a rigid radar-to-camera extrinsic.
///
/// Radar frame: x forward, y left, z up. Camera frame: x right, y down,
/// z along the optical axis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major rotation taking radar-frame vectors into the camera frame.
    pub extrinsic_rotation: [[f64; 3]; 3],
    /// Radar origin expressed in the camera frame, meters.
    pub extrinsic_translation: Vector3<f64>,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            fx: 200.0,
            fy: 200.0,
            cx: 160.0,
            cy: 120.0,
            width: 320,
            height: 240,
            extrinsic_rotation: [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]],
            extrinsic_translation: Vector3::zeros(),
        }
    }
}

/// Result of projecting a point into the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Pixel coordinates (possibly outside the image) and camera-frame depth.
    InFront { u: f64, v: f64, z: f64 },
    /// Camera-frame depth `z <= 0`.
    Behind { z: f64 },
}

impl Projection {
    pub fn pixel(&self) -> Option<(f64, f64)> {
        match *self {
            Projection::InFront { u, v, .. } => Some((u, v)),
            Projection::Behind { .. } => None,
        }
    }
}

/// Checks `R·Rᵀ = I` and `det R = +1`, both to 1e-9.
pub fn check_rotation(r: &Matrix3<f64>, what: &str) -> Result<()> {
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{what} has non-finite entries")));
    }
    let err = (r * r.transpose() - Matrix3::identity()).abs().max();
    if err > 1e-9 {
        return Err(Error::Config(format!("{what} is not orthonormal (max |RRᵀ − I| = {err:e})")));
    }
    let det = r.determinant();
    if Float::abs(det - 1.0) > 1e-9 {
        return Err(Error::Config(format!("{what} has determinant {det}, expected +1")));
    }
    Ok(())
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx.is_finite() && self.fx > 0.0 && self.fy.is_finite() && self.fy > 0.0) {
            return Err(Error::Config(format!("focal lengths must be > 0, got ({}, {})", self.fx, self.fy)));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::Config("principal point must be finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!("image size {}x{} is empty", self.width, self.height)));
        }
        if self.extrinsic_translation.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("extrinsic translation must be finite".into()));
        }
        check_rotation(&self.rotation(), "extrinsic rotation")
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        let r = &self.extrinsic_rotation;
        Matrix3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        )
    }

    pub fn radar_to_camera(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation() * point + self.extrinsic_translation
    }

    /// Pinhole projection of a camera-frame point.
    pub fn project_camera_point(&self, p: &Vector3<f64>) -> Projection {
        if p.z <= 0.0 {
            return Projection::Behind { z: p.z };
        }
        Projection::InFront {
            u: self.fx * p.x / p.z + self.cx,
            v: self.fy * p.y / p.z + self.cy,
            z: p.z,
        }
    }

    /// Pixel → normalized image coordinates `((u − cx)/fx, (v − cy)/fy)`.
    pub fn normalize(&self, u: f64, v: f64) -> Vector2<f64> {
        Vector2::new((u - self.cx) / self.fx, (v - self.cy) / self.fy)
    }

    /// Nearest pixel `(column, row)` inside the image, if any.
    pub fn pixel_index(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        let col = Float::round(u);
        let row = Float::round(v);
        if col >= 0.0 && row >= 0.0 && col < self.width as f64 && row < self.height as f64 {
            Some((col as usize, row as usize))
        } else {
            None
        }
    }
}

/// Radar-frame point → pixel coordinates and camera depth.
pub fn project_to_pixel(point: &Vector3<f64>, camera: &CameraModel) -> Projection {
    camera.project_camera_point(&camera.radar_to_camera(point))
}
