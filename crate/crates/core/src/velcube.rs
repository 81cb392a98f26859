//! Velocity cube: the Doppler axis of the radar cube collapsed to a single
//! radial velocity per spatial voxel, plus context-window lookups for LiDAR
//! points.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector3;
use num_traits::Float;

use crate::cube::{RadarConfig, RadarCube};
use crate::error::{Error, Result};

/// Radial velocities indexed `(range, azimuth, elevation)` with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityCube {
    config: RadarConfig,
    velocities: Vec<f64>,
    valid: Vec<bool>,
}

impl VelocityCube {
    /// Invalid voxels are forced to velocity 0.
    pub fn new(config: RadarConfig, mut velocities: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        config.validate()?;
        let [r, a, e, _] = config.cube_shape();
        let n = r * a * e;
        if velocities.len() != n || valid.len() != n {
            return Err(Error::Shape {
                what: "velocity cube",
                expected: vec![r, a, e],
                actual: vec![velocities.len(), valid.len()],
            });
        }
        let limit = config.max_speed();
        for (v, ok) in velocities.iter_mut().zip(&valid) {
            if !*ok {
                *v = 0.0;
            } else if !(v.is_finite() && Float::abs(*v) <= limit + 1e-12) {
                return Err(Error::Config(format!("velocity {v} outside ±{limit} m/s")));
            }
        }
        Ok(Self { config, velocities, valid })
    }

    pub fn config(&self) -> &RadarConfig {
        &self.config
    }

    pub fn shape(&self) -> [usize; 3] {
        let [r, a, e, _] = self.config.cube_shape();
        [r, a, e]
    }

    pub fn index(&self, range: usize, az: usize, el: usize) -> usize {
        let [_, a, e] = self.shape();
        (range * a + az) * e + el
    }

    pub fn velocity(&self, range: usize, az: usize, el: usize) -> Option<f64> {
        let i = self.index(range, az, el);
        self.valid[i].then_some(self.velocities[i])
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Per-voxel argmax over Doppler, mapped to velocity.
///
/// Ties go to the bin of smallest |velocity|, then to the lower bin index.
/// Voxels whose whole Doppler row is zero are invalid.
pub fn collapse_doppler(cube: &RadarCube) -> VelocityCube {
    let cfg = *cube.config();
    let [n_r, n_a, n_e, _] = cfg.cube_shape();
    let center = cfg.n_chirps / 2;
    let mut velocities = vec![0.0; n_r * n_a * n_e];
    let mut valid = vec![false; n_r * n_a * n_e];
    let mut voxel = 0;
    for r in 0..n_r {
        for a in 0..n_a {
            for e in 0..n_e {
                let row = cube.doppler_row(r, a, e);
                let mut best: Option<usize> = None;
                for (d, m) in row.iter().enumerate() {
                    if *m <= 0.0 {
                        continue;
                    }
                    best = match best {
                        None => Some(d),
                        Some(b) if *m > row[b] => Some(d),
                        Some(b) if *m == row[b] && d.abs_diff(center) < b.abs_diff(center) => Some(d),
                        keep => keep,
                    };
                }
                if let Some(d) = best {
                    velocities[voxel] = cfg.velocity_of_doppler_bin(d);
                    valid[voxel] = true;
                }
                voxel += 1;
            }
        }
    }
    VelocityCube { config: cfg, velocities, valid }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar {
    pub range: f64,
    /// `atan2(y, x)`, positive to the left.
    pub azimuth: f64,
    /// `asin(z / range)`, positive up.
    pub elevation: f64,
}

/// Radar-frame Cartesian (x forward, y left, z up) → range/azimuth/elevation.
pub fn cartesian_to_polar(point: &Vector3<f64>) -> Result<Polar> {
    let range = point.norm();
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::ZeroRange);
    }
    let s = (point.z / range).clamp(-1.0, 1.0);
    Ok(Polar {
        range,
        azimuth: Float::atan2(point.y, point.x),
        elevation: Float::asin(s),
    })
}

/// Extents, in bins, of the neighbourhood searched around a projected point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct ContextWindow {
    pub azimuth_extent: usize,
    pub elevation_extent: usize,
    pub range_extent: usize,
}

impl Default for ContextWindow {
    fn default() -> Self {
        Self { azimuth_extent: 10, elevation_extent: 10, range_extent: 20 }
    }
}

impl ContextWindow {
    pub fn validate(&self) -> Result<()> {
        if self.azimuth_extent == 0 || self.elevation_extent == 0 || self.range_extent == 0 {
            return Err(Error::Config(format!("context window extents must be >= 1, got {self:?}")));
        }
        Ok(())
    }

    /// Physical span `(azimuth rad, elevation rad, range m)` under `cfg`.
    pub fn physical_coverage(&self, cfg: &RadarConfig) -> (f64, f64, f64) {
        (
            self.azimuth_extent as f64 * cfg.azimuth_bin_width(),
            self.elevation_extent as f64 * cfg.elevation_bin_width(),
            self.range_extent as f64 * cfg.range_resolution,
        )
    }
}

/// Inclusive bin span of a window of `extent` bins centred on `center`,
/// clamped to `[0, len)`. Even extents put `extent / 2` bins below the centre
/// and one fewer above.
pub fn window_span(center: usize, extent: usize, len: usize) -> (usize, usize) {
    let below = extent / 2;
    let above = extent - 1 - below;
    (center.saturating_sub(below), (center + above).min(len - 1))
}

/// Result of a context-window radial velocity query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialLookup {
    Found { velocity: f64, bin: [usize; 3] },
    /// Inside coverage but no valid voxel in the window.
    NoReturn,
    /// Outside max range or the angular field of view.
    OutOfFov,
}

impl RadialLookup {
    pub fn found(&self) -> bool {
        matches!(self, RadialLookup::Found { .. })
    }

    pub fn velocity(&self) -> f64 {
        match self {
            RadialLookup::Found { velocity, .. } => *velocity,
            _ => 0.0,
        }
    }
}

/// Highest-|v| valid voxel in the context window around `point`.
///
/// Ties on |v| prefer the positive velocity, then the first voxel in
/// `(range, azimuth, elevation)` order.
pub fn query_radial_velocity(vc: &VelocityCube, point: &Vector3<f64>, window: &ContextWindow) -> RadialLookup {
    let polar = match cartesian_to_polar(point) {
        Ok(p) => p,
        Err(_) => return RadialLookup::OutOfFov,
    };
    let cfg = vc.config();
    let Some([rc, ac, ec]) = cfg.nearest_spatial_bin(polar.range, polar.azimuth, polar.elevation) else {
        return RadialLookup::OutOfFov;
    };
    let [n_r, n_a, n_e] = vc.shape();
    let (r0, r1) = window_span(rc, window.range_extent.max(1), n_r);
    let (a0, a1) = window_span(ac, window.azimuth_extent.max(1), n_a);
    let (e0, e1) = window_span(ec, window.elevation_extent.max(1), n_e);

    let mut best: Option<(f64, [usize; 3])> = None;
    for r in r0..=r1 {
        for a in a0..=a1 {
            for e in e0..=e1 {
                let i = vc.index(r, a, e);
                if !vc.valid[i] {
                    continue;
                }
                let v = vc.velocities[i];
                let better = match best {
                    None => true,
                    Some((b, _)) => {
                        Float::abs(v) > Float::abs(b) || (Float::abs(v) == Float::abs(b) && v > b)
                    }
                };
                if better {
                    best = Some((v, [r, a, e]));
                }
            }
        }
    }
    match best {
        Some((velocity, bin)) => RadialLookup::Found { velocity, bin },
        None => RadialLookup::NoReturn,
    }
}
