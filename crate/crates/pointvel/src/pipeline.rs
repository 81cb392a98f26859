//! The simulate → process → evaluate chain as library calls.

use std::path::Path;

use pointvel_core::metrics::{build_tracks, evaluate_tracks, TrackingFrame, TrackingParams};
use pointvel_core::sim::{ground_truth_velocities, simulate_adc, synth_flow, synth_lidar};
use pointvel_core::{
    build_radar_cube, collapse_doppler, estimate_frame, threshold_cube, AdcCube, CameraModel, FlowField, FramePair,
    FusionParams, MetricsReport, ObjectTrack, PointCloud, VelocityPointCloud,
};

use crate::error::{Error, Result};
use crate::scene::SceneFile;
use crate::sequence::{EstimateSet, FrameBundle, ProcessSettings, SequenceReader, ESTIMATES_MANIFEST, MANIFEST};

/// Synthesises frame `frame_index` of `scene`, with flow to the next frame
/// unless it is the last one, and per-point ground truth.
pub fn simulate_frame(scene: &SceneFile, frame_index: usize) -> pointvel_core::Result<FrameBundle> {
    let s = &scene.scene;
    let adc = simulate_adc(s, frame_index, &scene.radar)?;
    let lidar = synth_lidar(s, frame_index);
    let flow = if frame_index + 1 < s.n_frames { Some(synth_flow(s, frame_index, &scene.camera)?.field) } else { None };
    let ground_truth = Some(ground_truth_velocities(s, &lidar)?);
    Ok(FrameBundle { frame_index, timestamp: s.frame_time(frame_index), adc, lidar, flow, ground_truth })
}

/// Radar cube → threshold → velocity cube → per-point fusion for one frame.
/// `incoming_flow` runs from the previous frame to this one.
pub fn process_frame(
    adc: &AdcCube,
    lidar: &PointCloud,
    incoming_flow: &FlowField,
    camera: &CameraModel,
    settings: &ProcessSettings,
) -> pointvel_core::Result<VelocityPointCloud> {
    let cube = build_radar_cube(adc)?;
    let velocity_cube = collapse_doppler(&threshold_cube(&cube, settings.threshold_db));
    let pair = FramePair::stationary(incoming_flow.dt())?;
    let params = FusionParams { window: settings.window, cond_bound: settings.cond_bound };
    estimate_frame(lidar, &velocity_cube, incoming_flow, camera, &pair, &params)
}

/// Clusters the truth LiDAR of every frame into object tracks carrying the
/// per-frame mean estimate and centroid-displacement ground truth.
pub fn track_objects(
    truth: &SequenceReader,
    estimates: &EstimateSet,
    est_dir: &Path,
    params: &TrackingParams,
) -> Result<Vec<ObjectTrack>> {
    let est_manifest = est_dir.join(ESTIMATES_MANIFEST);
    if estimates.frames.len() != truth.len() {
        return Err(Error::FrameCount {
            est_path: est_manifest,
            est: estimates.frames.len(),
            truth_path: truth.dir().join(MANIFEST),
            truth: truth.len(),
        });
    }
    let mut clouds = Vec::with_capacity(truth.len());
    for (position, est) in estimates.frames.iter().enumerate() {
        let (frame_index, _) = truth.frame_time(position)?;
        if frame_index != est.frame_index {
            return Err(Error::schema(
                &est_manifest,
                format!("frames[{position}].frame_index: {} but the truth frame is {frame_index}", est.frame_index),
            ));
        }
        let lidar = truth.read_lidar(position)?;
        if let Some(cloud) = &est.cloud {
            let same = cloud.len() == lidar.len() && cloud.points.iter().zip(&lidar.points).all(|(e, p)| e.position == *p);
            if !same {
                return Err(Error::schema(
                    &est_manifest,
                    format!("frames[{position}]: estimate positions do not match the truth LiDAR of frame {frame_index}"),
                ));
            }
        }
        clouds.push((frame_index, lidar));
    }
    let frames: Vec<TrackingFrame<'_>> = clouds
        .iter()
        .zip(&estimates.frames)
        .map(|((frame_index, lidar), est)| TrackingFrame {
            frame_index: *frame_index,
            points: &lidar.points,
            estimates: est.cloud.as_ref().map(|c| c.points.as_slice()),
        })
        .collect();
    build_tracks(&frames, params).map_err(|e| Error::core(est_dir, e))
}

pub fn evaluate(tracks: &[ObjectTrack], est_dir: &Path) -> Result<MetricsReport> {
    evaluate_tracks(tracks).map_err(|e| Error::core(est_dir, e))
}
