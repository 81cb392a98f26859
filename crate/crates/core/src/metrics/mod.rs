//! Object-wise evaluation: clustering, centroid tracks, Average Velocity
//! Error (AVE) with its radial/tangential split, and Average Velocity
//! Angular Error (AVAE), plain and ground-truth-speed weighted.

pub mod cluster;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::Vector3;
use num_traits::Float;

use crate::cloud::{PointStatus, VelocityPoint};
use crate::error::{Error, Result};
pub use cluster::{cluster_points, NOISE};

/// Vectors shorter than this (m/s) have no direction and are left out of AVAE.
pub const ANGLE_EPSILON: f64 = 1e-6;

/// `(1/N)·Σ‖v_i − v̂_i‖₂`.
pub fn ave(estimates: &[Vector3<f64>], truths: &[Vector3<f64>]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch { left: estimates.len(), right: truths.len() });
    }
    if estimates.is_empty() {
        return Err(Error::Empty("AVE needs at least one estimate/truth pair"));
    }
    let total: f64 = estimates.iter().zip(truths).map(|(e, t)| (t - e).norm()).sum();
    Ok(total / estimates.len() as f64)
}

/// Splits `v` into components parallel and perpendicular to the line of
/// sight towards `position`.
pub fn decompose_radial_tangential(v: &Vector3<f64>, position: &Vector3<f64>) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let n = position.norm();
    if !(n > 0.0) {
        return Err(Error::ZeroRange);
    }
    let r_hat = position / n;
    let radial = r_hat * v.dot(&r_hat);
    Ok((radial, v - radial))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularError {
    pub degrees: f64,
    /// Pairs that entered the average.
    pub used: usize,
    /// Pairs dropped because either vector was shorter than [`ANGLE_EPSILON`].
    pub excluded: usize,
}

/// Mean angle between estimates and truths, in degrees. With `weighted`, each
/// angle is weighted by the ground-truth speed.
pub fn avae(estimates: &[Vector3<f64>], truths: &[Vector3<f64>], weighted: bool) -> Result<AngularError> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch { left: estimates.len(), right: truths.len() });
    }
    let mut sum = 0.0;
    let mut weights = 0.0;
    let mut used = 0;
    for (e, t) in estimates.iter().zip(truths) {
        let (ne, nt) = (e.norm(), t.norm());
        if ne < ANGLE_EPSILON || nt < ANGLE_EPSILON {
            continue;
        }
        // atan2 form of arccos(cos θ): exact 0 for parallel vectors, stable near 0° and 180°.
        let angle = Float::atan2(t.cross(e).norm(), t.dot(e)).to_degrees();
        let w = if weighted { nt } else { 1.0 };
        sum += w * angle;
        weights += w;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Empty("AVAE has no pair with both vectors above the angle epsilon"));
    }
    Ok(AngularError { degrees: sum / weights, used, excluded: estimates.len() - used })
}

/// One detected object in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackFrame {
    pub frame_index: usize,
    /// Cluster label within that frame.
    pub cluster_id: i32,
    pub centroid: Vector3<f64>,
    pub n_points: usize,
    /// Mean of the ok-status point estimates in the cluster.
    pub mean_estimate: Option<Vector3<f64>>,
    /// Centroid displacement from the previous frame divided by `dt`.
    pub ground_truth: Option<Vector3<f64>>,
}

/// A cluster followed over temporally adjacent frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTrack {
    pub id: usize,
    pub dt: f64,
    pub frames: Vec<TrackFrame>,
}

impl ObjectTrack {
    pub fn frame(&self, frame_index: usize) -> Option<&TrackFrame> {
        self.frames.iter().find(|f| f.frame_index == frame_index)
    }
}

/// Instantaneous centroid velocity `(c_{i+1} − c_i) / dt`.
pub fn centroid_velocity(track: &ObjectTrack, frame_index: usize) -> Result<Vector3<f64>> {
    let missing = |frame| Error::MissingFrame { track: track.id, frame };
    let a = track.frame(frame_index).ok_or_else(|| missing(frame_index))?;
    let b = track.frame(frame_index + 1).ok_or_else(|| missing(frame_index + 1))?;
    Ok((b.centroid - a.centroid) / track.dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingParams {
    pub eps: f64,
    pub min_points: usize,
    /// Largest centroid jump (m) accepted when linking clusters across frames.
    pub gate: f64,
    pub dt: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self { eps: 0.1, min_points: 3, gate: 0.5, dt: 0.1 }
    }
}

/// Input for one frame of [`build_tracks`].
#[derive(Debug, Clone, Copy)]
pub struct TrackingFrame<'a> {
    pub frame_index: usize,
    pub points: &'a [Vector3<f64>],
    /// Per-point estimates aligned with `points`, when this frame was processed.
    pub estimates: Option<&'a [VelocityPoint]>,
}

/// Clusters every frame, links clusters to the previous frame's tracks by
/// greedy nearest-centroid matching within `gate`, and fills in per-frame
/// estimates and centroid-displacement ground truth.
pub fn build_tracks(frames: &[TrackingFrame<'_>], params: &TrackingParams) -> Result<Vec<ObjectTrack>> {
    if !(params.dt.is_finite() && params.dt > 0.0) {
        return Err(Error::Config(alloc::format!("tracking dt must be > 0, got {}", params.dt)));
    }
    if !(params.eps.is_finite() && params.eps > 0.0) || params.min_points == 0 {
        return Err(Error::Config(alloc::format!(
            "clustering needs eps > 0 and min_points >= 1, got eps {} min_points {}",
            params.eps,
            params.min_points
        )));
    }
    let mut tracks: Vec<ObjectTrack> = Vec::new();
    // Tracks that have an entry in the previous frame.
    let mut active: Vec<usize> = Vec::new();
    let mut prev_index: Option<usize> = None;

    for frame in frames {
        if let Some(prev) = prev_index {
            if frame.frame_index <= prev {
                return Err(Error::Config(alloc::format!(
                    "frame indices must increase strictly ({} after {prev})",
                    frame.frame_index
                )));
            }
            if frame.frame_index != prev + 1 {
                active.clear();
            }
        }
        if let Some(est) = frame.estimates {
            if est.len() != frame.points.len() {
                return Err(Error::LengthMismatch { left: frame.points.len(), right: est.len() });
            }
        }
        let labels = cluster_points(frame.points, params.eps, params.min_points);

        struct Acc {
            sum: Vector3<f64>,
            n: usize,
            est_sum: Vector3<f64>,
            n_ok: usize,
        }
        let mut clusters: BTreeMap<i32, Acc> = BTreeMap::new();
        for (i, (p, label)) in frame.points.iter().zip(&labels).enumerate() {
            if *label == NOISE {
                continue;
            }
            let acc = clusters.entry(*label).or_insert(Acc { sum: Vector3::zeros(), n: 0, est_sum: Vector3::zeros(), n_ok: 0 });
            acc.sum += p;
            acc.n += 1;
            if let Some(est) = frame.estimates {
                if est[i].status == PointStatus::Ok {
                    acc.est_sum += est[i].velocity;
                    acc.n_ok += 1;
                }
            }
        }
        let detections: Vec<_> = clusters
            .into_iter()
            .map(|(id, a)| {
                let mean = (a.n_ok > 0).then(|| a.est_sum / a.n_ok as f64);
                (id, a.sum / a.n as f64, a.n, mean)
            })
            .collect();

        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for &t in &active {
            let last = tracks[t].frames.last().expect("active track has frames");
            for (d, det) in detections.iter().enumerate() {
                let dist = (det.1 - last.centroid).norm();
                if dist <= params.gate {
                    candidates.push((dist, t, d));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut det_track: Vec<Option<usize>> = alloc::vec![None; detections.len()];
        let mut track_taken: BTreeMap<usize, ()> = BTreeMap::new();
        for (_, t, d) in candidates {
            if det_track[d].is_none() && !track_taken.contains_key(&t) {
                det_track[d] = Some(t);
                track_taken.insert(t, ());
            }
        }

        let mut next_active = Vec::with_capacity(detections.len());
        for (d, (cluster_id, centroid, n_points, mean_estimate)) in detections.into_iter().enumerate() {
            let t = match det_track[d] {
                Some(t) => t,
                None => {
                    tracks.push(ObjectTrack { id: tracks.len(), dt: params.dt, frames: Vec::new() });
                    tracks.len() - 1
                }
            };
            let ground_truth = tracks[t].frames.last().map(|prev| (centroid - prev.centroid) / params.dt);
            tracks[t].frames.push(TrackFrame {
                frame_index: frame.frame_index,
                cluster_id,
                centroid,
                n_points,
                mean_estimate,
                ground_truth,
            });
            next_active.push(t);
        }
        next_active.sort_unstable();
        active = next_active;
        prev_index = Some(frame.frame_index);
    }
    Ok(tracks)
}

/// Aggregate metrics over all evaluated track-frames.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct MetricsReport {
    /// m/s
    pub ave: f64,
    pub ave_rad: f64,
    pub ave_tan: f64,
    /// Degrees; absent when no pair has a measurable direction.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub avae: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub avae_w: Option<f64>,
    /// Track-frames that entered the AVE.
    pub n_frames: usize,
    /// Track-frames left out of the AVAE for lack of direction.
    pub n_angular_excluded: usize,
}

/// One object-wise comparison: estimate and truth at the object's centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSample {
    pub estimate: Vector3<f64>,
    pub truth: Vector3<f64>,
    pub position: Vector3<f64>,
}

/// Track-frames carrying both an estimate and a ground truth.
pub fn object_samples(tracks: &[ObjectTrack]) -> Vec<ObjectSample> {
    tracks
        .iter()
        .flat_map(|t| t.frames.iter())
        .filter_map(|f| match (f.mean_estimate, f.ground_truth) {
            (Some(estimate), Some(truth)) => Some(ObjectSample { estimate, truth, position: f.centroid }),
            _ => None,
        })
        .collect()
}

pub fn evaluate_samples(samples: &[ObjectSample]) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::Empty("no track-frame has both an estimate and a ground truth"));
    }
    let est: Vec<Vector3<f64>> = samples.iter().map(|s| s.estimate).collect();
    let truth: Vec<Vector3<f64>> = samples.iter().map(|s| s.truth).collect();
    let mut est_rad = Vec::with_capacity(samples.len());
    let mut est_tan = Vec::with_capacity(samples.len());
    let mut truth_rad = Vec::with_capacity(samples.len());
    let mut truth_tan = Vec::with_capacity(samples.len());
    for s in samples {
        let (er, et) = decompose_radial_tangential(&s.estimate, &s.position)?;
        let (tr, tt) = decompose_radial_tangential(&s.truth, &s.position)?;
        est_rad.push(er);
        est_tan.push(et);
        truth_rad.push(tr);
        truth_tan.push(tt);
    }
    let (avae_plain, avae_weighted, excluded) = match (avae(&est, &truth, false), avae(&est, &truth, true)) {
        (Ok(a), Ok(w)) => (Some(a.degrees), Some(w.degrees), a.excluded),
        _ => (None, None, samples.len()),
    };
    Ok(MetricsReport {
        ave: ave(&est, &truth)?,
        ave_rad: ave(&est_rad, &truth_rad)?,
        ave_tan: ave(&est_tan, &truth_tan)?,
        avae: avae_plain,
        avae_w: avae_weighted,
        n_frames: samples.len(),
        n_angular_excluded: excluded,
    })
}

/// Aggregates AVE, AVE_rad, AVE_tan, AVAE and weighted AVAE across tracks.
pub fn evaluate_tracks(tracks: &[ObjectTrack]) -> Result<MetricsReport> {
    evaluate_samples(&object_samples(tracks))
}

/// Magnitudes of a velocity and of its radial and tangential parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedComponents {
    pub speed: f64,
    pub radial: f64,
    pub tangential: f64,
}

impl SpeedComponents {
    pub fn of(v: &Vector3<f64>, position: &Vector3<f64>) -> Result<Self> {
        let (r, t) = decompose_radial_tangential(v, position)?;
        Ok(Self { speed: v.norm(), radial: r.norm(), tangential: t.norm() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSample {
    pub track: usize,
    pub frame_index: usize,
    pub estimate: Option<SpeedComponents>,
    pub truth: Option<SpeedComponents>,
}

/// Per-track, per-frame speed curves for estimate and ground truth.
pub fn speed_series(tracks: &[ObjectTrack]) -> Result<Vec<SpeedSample>> {
    let mut out = Vec::new();
    for t in tracks {
        for f in &t.frames {
            out.push(SpeedSample {
                track: t.id,
                frame_index: f.frame_index,
                estimate: f.mean_estimate.map(|v| SpeedComponents::of(&v, &f.centroid)).transpose()?,
                truth: f.ground_truth.map(|v| SpeedComponents::of(&v, &f.centroid)).transpose()?,
            });
        }
    }
    Ok(out)
}
