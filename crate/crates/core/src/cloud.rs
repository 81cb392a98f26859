use alloc::vec::Vec;

use nalgebra::Vector3;

/// LiDAR points in the radar frame.
///
/// `labels` carries the source scatterer of synthetic points. It exists for
/// evaluation only; the estimation pipeline never reads it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub labels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        Self { points, labels: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Outcome of estimating one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PointStatus {
    Ok = 0,
    NoRadarReturn = 1,
    OutOfCamera = 2,
    OutOfRadarFov = 3,
    DegenerateGeometry = 4,
}

impl PointStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => PointStatus::Ok,
            1 => PointStatus::NoRadarReturn,
            2 => PointStatus::OutOfCamera,
            3 => PointStatus::OutOfRadarFov,
            4 => PointStatus::DegenerateGeometry,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::NoRadarReturn => "no_radar_return",
            PointStatus::OutOfCamera => "out_of_camera",
            PointStatus::OutOfRadarFov => "out_of_radar_fov",
            PointStatus::DegenerateGeometry => "degenerate_geometry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityPoint {
    /// Radar frame, meters.
    pub position: Vector3<f64>,
    /// Radar frame, meters/second. Zero unless `status` is `Ok`.
    pub velocity: Vector3<f64>,
    pub status: PointStatus,
}

impl VelocityPoint {
    pub fn ok(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { position, velocity, status: PointStatus::Ok }
    }

    pub fn failed(position: Vector3<f64>, status: PointStatus) -> Self {
        Self { position, velocity: Vector3::zeros(), status }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VelocityPointCloud {
    pub points: Vec<VelocityPoint>,
}

impl VelocityPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, status: PointStatus) -> usize {
        self.points.iter().filter(|p| p.status == status).count()
    }
}
