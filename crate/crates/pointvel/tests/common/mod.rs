#![allow(dead_code)]

use pointvel::scene::SceneFile;
use pointvel_core::{CameraModel, RadarConfig, Scatterer, SceneConfig, Vector3};

/// A radar small enough for fast file-level tests.
pub fn small_radar() -> RadarConfig {
    RadarConfig { n_samples: 16, n_chirps: 8, n_azimuth_bins: 4, n_elevation_bins: 2, ..RadarConfig::default() }
}

pub fn small_camera() -> CameraModel {
    CameraModel { fx: 20.0, fy: 20.0, cx: 16.0, cy: 12.0, width: 32, height: 24, ..CameraModel::default() }
}

pub fn small_scene(n_frames: usize) -> SceneFile {
    SceneFile {
        radar: small_radar(),
        camera: small_camera(),
        scene: SceneConfig {
            scatterers: vec![
                Scatterer { position: Vector3::new(0.3, 0.02, 0.0), velocity: Vector3::new(0.1, 0.05, 0.0), amplitude: 1.0 },
                Scatterer { position: Vector3::new(0.5, -0.05, 0.01), velocity: Vector3::zeros(), amplitude: 0.8 },
            ],
            lidar_points_per_scatterer: 8,
            lidar_jitter_sigma: 0.005,
            noise_floor: 0.05,
            frame_interval: 0.1,
            n_frames,
            seed: 3,
        },
    }
}

/// Every file under `dir` with its contents, sorted by relative path.
pub fn tree(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
