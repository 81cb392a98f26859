//! Synthetic FMCW scenes with exact LiDAR points, optical flow and per-point
//! ground-truth velocities.
//!
//! The radar model is stop-and-hop: during one frame every scatterer sits at
//! its frame-time position, and its ADC contribution is a separable complex
//! tone over (chirp, sample, azimuth antenna, elevation antenna).
//!
//! LiDAR jitter offsets are drawn once per scatterer, so a scatterer's points
//! are material points that translate rigidly from frame to frame.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use num_complex::{Complex32, Complex64};
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::camera::{CameraModel, Projection};
use crate::cloud::{PointCloud, VelocityPoint, VelocityPointCloud};
use crate::cube::{AdcCube, RadarConfig};
use crate::error::{Error, Result};
use crate::fusion::FlowField;
use crate::velcube::cartesian_to_polar;

const JITTER_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct Scatterer {
    /// Radar frame at t = 0, meters.
    pub position: Vector3<f64>,
    /// Meters/second, constant.
    pub velocity: Vector3<f64>,
    pub amplitude: f64,
}

impl Scatterer {
    pub fn position_at(&self, t: f64) -> Vector3<f64> {
        self.position + self.velocity * t
    }

    pub fn radial_velocity_at(&self, t: f64) -> f64 {
        let p = self.position_at(t);
        let n = p.norm();
        if n > 0.0 {
            self.velocity.dot(&p) / n
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct SceneConfig {
    pub scatterers: Vec<Scatterer>,
    pub lidar_points_per_scatterer: usize,
    pub lidar_jitter_sigma: f64,
    /// Standard deviation of the circular complex ADC noise.
    pub noise_floor: f64,
    /// Seconds between frames.
    pub frame_interval: f64,
    pub n_frames: usize,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            scatterers: Vec::new(),
            lidar_points_per_scatterer: 1,
            lidar_jitter_sigma: 0.0,
            noise_floor: 0.0,
            frame_interval: 0.1,
            n_frames: 2,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_interval.is_finite() && self.frame_interval > 0.0) {
            return Err(Error::Config(format!("frame_interval must be > 0, got {}", self.frame_interval)));
        }
        if self.n_frames < 2 {
            return Err(Error::Config(format!("n_frames must be >= 2, got {}", self.n_frames)));
        }
        if !(self.lidar_jitter_sigma.is_finite() && self.lidar_jitter_sigma >= 0.0) {
            return Err(Error::Config(format!("lidar_jitter_sigma must be >= 0, got {}", self.lidar_jitter_sigma)));
        }
        if !(self.noise_floor.is_finite() && self.noise_floor >= 0.0) {
            return Err(Error::Config(format!("noise_floor must be >= 0, got {}", self.noise_floor)));
        }
        for (index, s) in self.scatterers.iter().enumerate() {
            let finite = s.position.iter().chain(s.velocity.iter()).all(|x| x.is_finite());
            if !finite || !(s.amplitude.is_finite() && s.amplitude > 0.0) {
                return Err(Error::Scatterer {
                    index,
                    reason: format!("needs finite position/velocity and amplitude > 0 (amplitude {})", s.amplitude),
                });
            }
        }
        Ok(())
    }

    pub fn frame_time(&self, frame_index: usize) -> f64 {
        frame_index as f64 * self.frame_interval
    }

    /// The same scene with every scatterer moved forward by `frames` frames.
    pub fn advanced(&self, frames: usize) -> Self {
        let t = self.frame_time(frames);
        let mut next = self.clone();
        for s in &mut next.scatterers {
            s.position = s.position_at(t);
        }
        next
    }

    fn check_frame(&self, frame_index: usize) -> Result<()> {
        if frame_index >= self.n_frames {
            return Err(Error::FrameOutOfRange { frame: frame_index, n_frames: self.n_frames });
        }
        Ok(())
    }

    /// Rigid per-point offsets of scatterer `index`, identical in every frame.
    fn jitter_offsets(&self, index: usize) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(JITTER_STREAM | index as u64);
        let sigma = self.lidar_jitter_sigma;
        (0..self.lidar_points_per_scatterer)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let z: f64 = rng.sample(StandardNormal);
                Vector3::new(x, y, z) * sigma
            })
            .collect()
    }
}

/// Raw ADC cube of `scene` at `frame_index`.
///
/// Each scatterer contributes
/// `amplitude · exp(j2π(f_r·s + f_d·c + f_az·a + f_el·e))` with
/// `f_r = range / (range_resolution · n_samples)`,
/// `f_d = v_radial / (speed_resolution · n_chirps)`,
/// `f_az = d_az · sin(azimuth)` and `f_el = d_el · sin(elevation)`, `d` being
/// the element spacing in wavelengths. In one-sided range mode only the real
/// part is kept. Noise is circular complex Gaussian with standard deviation
/// `noise_floor` (real Gaussian in one-sided mode).
pub fn simulate_adc(scene: &SceneConfig, frame_index: usize, radar: &RadarConfig) -> Result<AdcCube> {
    radar.validate()?;
    scene.validate()?;
    scene.check_frame(frame_index)?;
    let t = scene.frame_time(frame_index);
    let [n_c, n_s, n_a, n_e] = radar.adc_shape();
    let mut acc = vec![Complex64::new(0.0, 0.0); n_c * n_s * n_a * n_e];

    let max_range = radar.max_range() - 0.5 * radar.range_resolution;
    let v_lo = -radar.max_speed();
    let v_hi = radar.max_speed() - 0.5 * radar.speed_resolution;

    for (index, s) in scene.scatterers.iter().enumerate() {
        let pos = s.position_at(t);
        let polar = cartesian_to_polar(&pos).map_err(|_| Error::Scatterer {
            index,
            reason: format!("sits at the radar origin at frame {frame_index}"),
        })?;
        if !(polar.range < max_range) {
            return Err(Error::Scatterer {
                index,
                reason: format!(
                    "range {:.4} m at frame {frame_index} is beyond the unambiguous range {:.4} m",
                    polar.range, max_range
                ),
            });
        }
        let v_rad = s.velocity.dot(&pos) / polar.range;
        if !(v_rad >= v_lo && v_rad < v_hi) {
            return Err(Error::Scatterer {
                index,
                reason: format!(
                    "radial velocity {v_rad:.4} m/s at frame {frame_index} is outside the unambiguous interval [{v_lo:.4}, {v_hi:.4})"
                ),
            });
        }

        let f_range = polar.range / (radar.range_resolution * n_s as f64);
        let f_dopp = v_rad / (radar.speed_resolution * n_c as f64);
        let f_az = radar.azimuth_spacing() * Float::sin(polar.azimuth);
        let f_el = radar.elevation_spacing() * Float::sin(polar.elevation);
        let tone = |f: f64, n: usize| -> Vec<Complex64> {
            (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * f * k as f64)).collect()
        };
        let range_tone = tone(f_range, n_s);
        let dopp_tone = tone(f_dopp, n_c);
        let az_tone = tone(f_az, n_a);
        let el_tone = tone(f_el, n_e);

        let mut i = 0;
        for dc in &dopp_tone {
            let ac = dc * s.amplitude;
            for rs in &range_tone {
                let bs = ac * rs;
                for za in &az_tone {
                    let ba = bs * za;
                    for ze in &el_tone {
                        acc[i] += ba * ze;
                        i += 1;
                    }
                }
            }
        }
    }

    let mut samples: Vec<Complex32> = Vec::with_capacity(acc.len());
    if scene.noise_floor > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
        rng.set_stream(frame_index as u64);
        let sigma = if radar.one_sided_range { scene.noise_floor } else { scene.noise_floor / Float::sqrt(2.0) };
        for x in &acc {
            let nr: f64 = rng.sample(StandardNormal);
            let ni: f64 = if radar.one_sided_range { 0.0 } else { rng.sample(StandardNormal) };
            samples.push(to_sample(x + Complex64::new(nr * sigma, ni * sigma), radar.one_sided_range));
        }
    } else {
        samples.extend(acc.iter().map(|x| to_sample(*x, radar.one_sided_range)));
    }
    AdcCube::new(*radar, samples)
}

fn to_sample(x: Complex64, real_only: bool) -> Complex32 {
    if real_only {
        Complex32::new(x.re as f32, 0.0)
    } else {
        Complex32::new(x.re as f32, x.im as f32)
    }
}

/// LiDAR cloud at `frame_index`, labelled by source scatterer.
pub fn synth_lidar(scene: &SceneConfig, frame_index: usize) -> PointCloud {
    let t = scene.frame_time(frame_index);
    let mut points = Vec::with_capacity(scene.scatterers.len() * scene.lidar_points_per_scatterer);
    let mut labels = Vec::with_capacity(points.capacity());
    for (index, s) in scene.scatterers.iter().enumerate() {
        let center = s.position_at(t);
        for offset in scene.jitter_offsets(index) {
            points.push(center + offset);
            labels.push(index as u32);
        }
    }
    PointCloud { points, labels: Some(labels) }
}

/// Exact flow from `frame_index` to `frame_index + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFlow {
    pub field: FlowField,
    /// Points skipped because they were behind the camera in either frame.
    pub behind_camera: usize,
}

/// Rasterises the displacement of every LiDAR point between two consecutive
/// frames at the point's nearest pixel in the earlier frame. On collisions
/// the point closest to the camera wins.
pub fn synth_flow(scene: &SceneConfig, frame_index: usize, camera: &CameraModel) -> Result<SyntheticFlow> {
    scene.validate()?;
    camera.validate()?;
    if frame_index + 1 >= scene.n_frames {
        return Err(Error::FrameOutOfRange { frame: frame_index + 1, n_frames: scene.n_frames });
    }
    let (w, h) = (camera.width, camera.height);
    let mut flow = vec![Vector2::zeros(); w * h];
    let mut covered = vec![false; w * h];
    let mut depth = vec![f64::INFINITY; w * h];
    let mut behind_camera = 0;

    let t0 = scene.frame_time(frame_index);
    let t1 = scene.frame_time(frame_index + 1);
    for (index, s) in scene.scatterers.iter().enumerate() {
        let (c0, c1) = (s.position_at(t0), s.position_at(t1));
        for offset in scene.jitter_offsets(index) {
            let p0 = camera.project_camera_point(&camera.radar_to_camera(&(c0 + offset)));
            let p1 = camera.project_camera_point(&camera.radar_to_camera(&(c1 + offset)));
            let (Projection::InFront { u: u0, v: v0, z }, Projection::InFront { u: u1, v: v1, .. }) = (p0, p1) else {
                behind_camera += 1;
                continue;
            };
            let Some((col, row)) = camera.pixel_index(u0, v0) else {
                continue;
            };
            let i = row * w + col;
            if z < depth[i] {
                depth[i] = z;
                flow[i] = Vector2::new(u1 - u0, v1 - v0);
                covered[i] = true;
            }
        }
    }
    let field = FlowField::new(w, h, flow, covered, scene.frame_interval)?;
    Ok(SyntheticFlow { field, behind_camera })
}

/// Per-point velocity of each point's source scatterer.
pub fn ground_truth_velocities(scene: &SceneConfig, cloud: &PointCloud) -> Result<VelocityPointCloud> {
    let labels = match &cloud.labels {
        Some(l) if l.len() == cloud.points.len() => l,
        Some(l) => return Err(Error::LengthMismatch { left: cloud.points.len(), right: l.len() }),
        None if cloud.points.is_empty() => return Ok(VelocityPointCloud::default()),
        None => return Err(Error::Unlabeled(0)),
    };
    let points = cloud
        .points
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, label))| {
            let s = scene.scatterers.get(*label as usize).ok_or(Error::Unlabeled(i))?;
            Ok(VelocityPoint::ok(*p, s.velocity))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VelocityPointCloud { points })
}
