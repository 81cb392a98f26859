//! On-disk frame sequences and estimate sets.
//!
//! A sequence directory holds `manifest.toml` (radar and camera configs plus
//! the frame list) and one `frame_NNNNN/` subdirectory per frame:
//!
//! | file                | dtype | shape                          |
//! |---------------------|-------|--------------------------------|
//! | `frame.toml`        | text  | index, timestamp, flags        |
//! | `adc.bin`           | c32   | chirps × samples × az × el     |
//! | `lidar.bin`         | f64   | N × 3                          |
//! | `labels.bin`        | u32   | N (optional)                   |
//! | `flow.bin`          | f64   | height × width × 2 (optional)  |
//! | `flow_covered.bin`  | u8    | height × width (with flow)     |
//! | `gt_position.bin`   | f64   | M × 3 (optional)               |
//! | `gt_velocity.bin`   | f64   | M × 3 (with ground truth)      |
//! | `gt_status.bin`     | u8    | M (with ground truth)          |
//!
//! A frame's flow goes from that frame to the next one.
//!
//! An estimate directory holds `estimates.toml` and one subdirectory per
//! estimated frame with `position.bin`, `velocity.bin` (both f64 N × 3) and
//! `status.bin` (u8 N, [`PointStatus`] codes).

use std::path::{Path, PathBuf};

use pointvel_core::{
    AdcCube, CameraModel, ContextWindow, FlowField, PointCloud, PointStatus, RadarConfig, Vector2, Vector3,
    VelocityPoint, VelocityPointCloud,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files::{create_dir, read_tensor, read_toml, write_tensor, write_toml};
use crate::format::{FormatError, Tensor, TensorData, HEADER_LEN};

pub const SEQUENCE_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.toml";
pub const ESTIMATES_MANIFEST: &str = "estimates.toml";
pub const FRAME_META: &str = "frame.toml";

/// Everything recorded for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub frame_index: usize,
    /// Seconds since the start of the sequence.
    pub timestamp: f64,
    pub adc: AdcCube,
    pub lidar: PointCloud,
    /// Flow from this frame to the next; absent in the last frame.
    pub flow: Option<FlowField>,
    pub ground_truth: Option<VelocityPointCloud>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub radar: RadarConfig,
    pub camera: CameraModel,
    pub frame_interval: f64,
    pub frames: Vec<FrameBundle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub n_frames: usize,
    pub frame_interval: f64,
    /// Frame subdirectory names, in frame order.
    pub frames: Vec<String>,
    pub radar: RadarConfig,
    pub camera: CameraModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameMeta {
    frame_index: usize,
    timestamp: f64,
    n_points: usize,
    has_labels: bool,
    n_ground_truth: Option<usize>,
    flow_dt: Option<f64>,
}

pub fn frame_dir_name(frame_index: usize) -> String {
    format!("frame_{frame_index:05}")
}

fn check_dir_name(manifest: &Path, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
    if ok {
        Ok(())
    } else {
        Err(Error::schema(manifest, format!("frames: {name:?} is not a plain directory name")))
    }
}

fn bad_value(path: &Path, offset: usize, reason: String) -> Error {
    Error::format(path, FormatError::Value { offset, reason })
}

fn vec3_tensor(points: impl Iterator<Item = Vector3<f64>>) -> Tensor {
    let data: Vec<f64> = points.flat_map(|p| [p.x, p.y, p.z]).collect();
    Tensor::new(vec![data.len() / 3, 3], TensorData::F64(data))
}

fn check_finite(path: &Path, values: &[f64]) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(bad_value(path, HEADER_LEN + 8 * i, format!("element {i} is not finite"))),
        None => Ok(()),
    }
}

fn read_f64(path: &Path, shape: &[Option<usize>]) -> Result<(Vec<usize>, Vec<f64>)> {
    let t = read_tensor(path)?;
    t.expect_shape(shape).map_err(|e| Error::format(path, e))?;
    let dims = t.shape().to_vec();
    let data = t.into_f64().map_err(|e| Error::format(path, e))?;
    check_finite(path, &data)?;
    Ok((dims, data))
}

fn read_vec3s(path: &Path, n: Option<usize>) -> Result<Vec<Vector3<f64>>> {
    let (_, data) = read_f64(path, &[n, Some(3)])?;
    Ok(data.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect())
}

fn read_u8s(path: &Path, shape: &[Option<usize>]) -> Result<Vec<u8>> {
    let t = read_tensor(path)?;
    t.expect_shape(shape).map_err(|e| Error::format(path, e))?;
    t.into_u8().map_err(|e| Error::format(path, e))
}

fn read_statuses(path: &Path, n: usize) -> Result<Vec<PointStatus>> {
    read_u8s(path, &[Some(n)])?
        .into_iter()
        .enumerate()
        .map(|(i, code)| {
            PointStatus::from_code(code).ok_or_else(|| bad_value(path, HEADER_LEN + i, format!("unknown point status code {code}")))
        })
        .collect()
}

fn write_velocity_cloud(dir: &Path, prefix: &str, cloud: &VelocityPointCloud) -> Result<()> {
    let n = cloud.len();
    write_tensor(&dir.join(format!("{prefix}position.bin")), &vec3_tensor(cloud.points.iter().map(|p| p.position)))?;
    write_tensor(&dir.join(format!("{prefix}velocity.bin")), &vec3_tensor(cloud.points.iter().map(|p| p.velocity)))?;
    let status: Vec<u8> = cloud.points.iter().map(|p| p.status.code()).collect();
    write_tensor(&dir.join(format!("{prefix}status.bin")), &Tensor::new(vec![n], TensorData::U8(status)))
}

fn read_velocity_cloud(dir: &Path, prefix: &str, n: Option<usize>) -> Result<VelocityPointCloud> {
    let positions = read_vec3s(&dir.join(format!("{prefix}position.bin")), n)?;
    let n = positions.len();
    let velocities = read_vec3s(&dir.join(format!("{prefix}velocity.bin")), Some(n))?;
    let statuses = read_statuses(&dir.join(format!("{prefix}status.bin")), n)?;
    let points = positions
        .into_iter()
        .zip(velocities)
        .zip(statuses)
        .map(|((position, velocity), status)| VelocityPoint { position, velocity, status })
        .collect();
    Ok(VelocityPointCloud { points })
}

/// Writes frames of one sequence. Frames are independent, so `write_frame`
/// may be called from several threads; `finish` writes the manifest.
#[derive(Debug)]
pub struct SequenceWriter {
    dir: PathBuf,
    radar: RadarConfig,
    camera: CameraModel,
    frame_interval: f64,
}

impl SequenceWriter {
    pub fn create(dir: &Path, radar: RadarConfig, camera: CameraModel, frame_interval: f64) -> Result<Self> {
        radar.validate().map_err(|e| Error::core(dir, e))?;
        camera.validate().map_err(|e| Error::core(dir, e))?;
        create_dir(dir)?;
        Ok(Self { dir: dir.to_path_buf(), radar, camera, frame_interval })
    }

    pub fn write_frame(&self, frame: &FrameBundle) -> Result<String> {
        let name = frame_dir_name(frame.frame_index);
        let dir = self.dir.join(&name);
        if *frame.adc.config() != self.radar {
            return Err(Error::schema(&dir, "adc: radar config differs from the sequence's"));
        }
        if let Some(labels) = &frame.lidar.labels {
            if labels.len() != frame.lidar.len() {
                return Err(Error::schema(&dir, format!("labels: {} labels for {} points", labels.len(), frame.lidar.len())));
            }
        }
        if let Some(flow) = &frame.flow {
            if (flow.width(), flow.height()) != (self.camera.width, self.camera.height) {
                return Err(Error::schema(&dir, "flow: size differs from the camera image"));
            }
        }
        create_dir(&dir)?;
        let meta = FrameMeta {
            frame_index: frame.frame_index,
            timestamp: frame.timestamp,
            n_points: frame.lidar.len(),
            has_labels: frame.lidar.labels.is_some(),
            n_ground_truth: frame.ground_truth.as_ref().map(|g| g.len()),
            flow_dt: frame.flow.as_ref().map(|f| f.dt()),
        };
        write_toml(&dir.join(FRAME_META), &meta)?;
        let shape = self.radar.adc_shape().to_vec();
        write_tensor(&dir.join("adc.bin"), &Tensor::new(shape, TensorData::C32(frame.adc.samples().to_vec())))?;
        write_tensor(&dir.join("lidar.bin"), &vec3_tensor(frame.lidar.points.iter().copied()))?;
        if let Some(labels) = &frame.lidar.labels {
            write_tensor(&dir.join("labels.bin"), &Tensor::new(vec![labels.len()], TensorData::U32(labels.clone())))?;
        }
        if let Some(flow) = &frame.flow {
            let (w, h) = (flow.width(), flow.height());
            let data: Vec<f64> = flow.flow().iter().flat_map(|f| [f.x, f.y]).collect();
            write_tensor(&dir.join("flow.bin"), &Tensor::new(vec![h, w, 2], TensorData::F64(data)))?;
            let covered: Vec<u8> = flow.covered().iter().map(|&c| c as u8).collect();
            write_tensor(&dir.join("flow_covered.bin"), &Tensor::new(vec![h, w], TensorData::U8(covered)))?;
        }
        if let Some(gt) = &frame.ground_truth {
            write_velocity_cloud(&dir, "gt_", gt)?;
        }
        Ok(name)
    }

    /// Writes the manifest listing `frames` (directory names in order).
    pub fn finish(&self, frames: Vec<String>) -> Result<()> {
        let manifest = Manifest {
            format_version: SEQUENCE_VERSION,
            n_frames: frames.len(),
            frame_interval: self.frame_interval,
            frames,
            radar: self.radar,
            camera: self.camera.clone(),
        };
        write_toml(&self.dir.join(MANIFEST), &manifest)
    }
}

pub fn write_sequence(dir: &Path, sequence: &Sequence) -> Result<()> {
    let writer = SequenceWriter::create(dir, sequence.radar, sequence.camera.clone(), sequence.frame_interval)?;
    for pair in sequence.frames.windows(2) {
        if pair[1].frame_index <= pair[0].frame_index {
            return Err(Error::schema(
                dir,
                format!("frame indices must increase strictly ({} after {})", pair[1].frame_index, pair[0].frame_index),
            ));
        }
    }
    let names = sequence.frames.iter().map(|f| writer.write_frame(f)).collect::<Result<Vec<_>>>()?;
    writer.finish(names)
}

/// Random access to the frames of a sequence directory.
#[derive(Debug, Clone)]
pub struct SequenceReader {
    dir: PathBuf,
    manifest: Manifest,
}

impl SequenceReader {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let manifest: Manifest = read_toml(&path)?;
        if manifest.format_version != SEQUENCE_VERSION {
            return Err(Error::schema(
                &path,
                format!("format_version: {} is not supported (expected {SEQUENCE_VERSION})", manifest.format_version),
            ));
        }
        if manifest.n_frames != manifest.frames.len() {
            return Err(Error::schema(
                &path,
                format!("n_frames: {} but frames lists {}", manifest.n_frames, manifest.frames.len()),
            ));
        }
        if !(manifest.frame_interval.is_finite() && manifest.frame_interval > 0.0) {
            return Err(Error::schema(&path, format!("frame_interval: must be > 0, got {}", manifest.frame_interval)));
        }
        manifest.radar.validate().map_err(|e| Error::core(&path, e))?;
        manifest.camera.validate().map_err(|e| Error::core(&path, e))?;
        for name in &manifest.frames {
            check_dir_name(&path, name)?;
        }
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn len(&self) -> usize {
        self.manifest.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.frames.is_empty()
    }

    fn frame_dir(&self, position: usize) -> PathBuf {
        self.dir.join(&self.manifest.frames[position])
    }

    fn meta(&self, position: usize) -> Result<FrameMeta> {
        let path = self.frame_dir(position).join(FRAME_META);
        let meta: FrameMeta = read_toml(&path)?;
        if !meta.timestamp.is_finite() {
            return Err(Error::schema(&path, "timestamp: must be finite"));
        }
        Ok(meta)
    }

    /// Frame index and timestamp of the frame at `position`.
    pub fn frame_time(&self, position: usize) -> Result<(usize, f64)> {
        let meta = self.meta(position)?;
        Ok((meta.frame_index, meta.timestamp))
    }

    pub fn read_lidar(&self, position: usize) -> Result<PointCloud> {
        let meta = self.meta(position)?;
        self.lidar_with(position, &meta)
    }

    fn lidar_with(&self, position: usize, meta: &FrameMeta) -> Result<PointCloud> {
        let dir = self.frame_dir(position);
        let points = read_vec3s(&dir.join("lidar.bin"), Some(meta.n_points))?;
        let labels = if meta.has_labels {
            let path = dir.join("labels.bin");
            let t = read_tensor(&path)?;
            t.expect_shape(&[Some(meta.n_points)]).map_err(|e| Error::format(&path, e))?;
            Some(t.into_u32().map_err(|e| Error::format(&path, e))?)
        } else {
            None
        };
        Ok(PointCloud { points, labels })
    }

    /// Flow from the frame at `position` to the next one, if recorded.
    pub fn read_flow(&self, position: usize) -> Result<Option<FlowField>> {
        let meta = self.meta(position)?;
        self.flow_with(position, &meta)
    }

    fn flow_with(&self, position: usize, meta: &FrameMeta) -> Result<Option<FlowField>> {
        let Some(dt) = meta.flow_dt else {
            return Ok(None);
        };
        let dir = self.frame_dir(position);
        let (w, h) = (self.manifest.camera.width, self.manifest.camera.height);
        let path = dir.join("flow.bin");
        let (_, data) = read_f64(&path, &[Some(h), Some(w), Some(2)])?;
        let flow: Vec<Vector2<f64>> = data.chunks_exact(2).map(|c| Vector2::new(c[0], c[1])).collect();
        let covered_path = dir.join("flow_covered.bin");
        let covered = read_u8s(&covered_path, &[Some(h), Some(w)])?
            .into_iter()
            .enumerate()
            .map(|(i, c)| match c {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(bad_value(&covered_path, HEADER_LEN + i, format!("coverage flag {c} is not 0 or 1"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        let field = FlowField::new(w, h, flow, covered, dt).map_err(|e| Error::core(dir.join(FRAME_META), e))?;
        Ok(Some(field))
    }

    pub fn read_adc(&self, position: usize) -> Result<AdcCube> {
        let path = self.frame_dir(position).join("adc.bin");
        let radar = self.manifest.radar;
        let shape: Vec<Option<usize>> = radar.adc_shape().iter().map(|&d| Some(d)).collect();
        let t = read_tensor(&path)?;
        t.expect_shape(&shape).map_err(|e| Error::format(&path, e))?;
        let samples = t.into_c32().map_err(|e| Error::format(&path, e))?;
        if let Some(i) = samples.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(bad_value(&path, HEADER_LEN + 8 * i, format!("sample {i} is not finite")));
        }
        AdcCube::new(radar, samples).map_err(|e| Error::core(&path, e))
    }

    pub fn read_ground_truth(&self, position: usize) -> Result<Option<VelocityPointCloud>> {
        let meta = self.meta(position)?;
        self.ground_truth_with(position, &meta)
    }

    fn ground_truth_with(&self, position: usize, meta: &FrameMeta) -> Result<Option<VelocityPointCloud>> {
        match meta.n_ground_truth {
            Some(n) => Ok(Some(read_velocity_cloud(&self.frame_dir(position), "gt_", Some(n))?)),
            None => Ok(None),
        }
    }

    pub fn read_frame(&self, position: usize) -> Result<FrameBundle> {
        let meta = self.meta(position)?;
        Ok(FrameBundle {
            frame_index: meta.frame_index,
            timestamp: meta.timestamp,
            adc: self.read_adc(position)?,
            lidar: self.lidar_with(position, &meta)?,
            flow: self.flow_with(position, &meta)?,
            ground_truth: self.ground_truth_with(position, &meta)?,
        })
    }
}

pub fn read_sequence(dir: &Path) -> Result<Sequence> {
    let reader = SequenceReader::open(dir)?;
    let frames = (0..reader.len()).map(|i| reader.read_frame(i)).collect::<Result<Vec<_>>>()?;
    for pair in frames.windows(2) {
        if pair[1].frame_index <= pair[0].frame_index {
            return Err(Error::schema(
                dir.join(MANIFEST),
                format!("frames: indices must increase strictly ({} after {})", pair[1].frame_index, pair[0].frame_index),
            ));
        }
    }
    let m = reader.manifest;
    Ok(Sequence { radar: m.radar, camera: m.camera, frame_interval: m.frame_interval, frames })
}

/// Settings `process` ran with, recorded next to its output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSettings {
    pub threshold_db: f64,
    pub cond_bound: f64,
    pub window: ContextWindow,
}

/// Per-point estimates for one input frame; `cloud` is absent for frames
/// that could not be processed (the first frame has no incoming flow).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateFrame {
    pub frame_index: usize,
    pub timestamp: f64,
    pub cloud: Option<VelocityPointCloud>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    pub frame_interval: f64,
    pub settings: ProcessSettings,
    pub frames: Vec<EstimateFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateEntry {
    frame_index: usize,
    timestamp: f64,
    /// Subdirectory holding the estimate, absent when the frame has none.
    dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateManifest {
    format_version: u32,
    n_frames: usize,
    frame_interval: f64,
    settings: ProcessSettings,
    frames: Vec<EstimateEntry>,
}

pub fn write_estimates(dir: &Path, set: &EstimateSet) -> Result<()> {
    create_dir(dir)?;
    let mut entries = Vec::with_capacity(set.frames.len());
    for frame in &set.frames {
        let name = frame.cloud.as_ref().map(|_| frame_dir_name(frame.frame_index));
        if let (Some(cloud), Some(name)) = (&frame.cloud, &name) {
            let sub = dir.join(name);
            create_dir(&sub)?;
            write_velocity_cloud(&sub, "", cloud)?;
        }
        entries.push(EstimateEntry { frame_index: frame.frame_index, timestamp: frame.timestamp, dir: name });
    }
    let manifest = EstimateManifest {
        format_version: SEQUENCE_VERSION,
        n_frames: entries.len(),
        frame_interval: set.frame_interval,
        settings: set.settings,
        frames: entries,
    };
    write_toml(&dir.join(ESTIMATES_MANIFEST), &manifest)
}

pub fn read_estimates(dir: &Path) -> Result<EstimateSet> {
    let path = dir.join(ESTIMATES_MANIFEST);
    let m: EstimateManifest = read_toml(&path)?;
    if m.format_version != SEQUENCE_VERSION {
        return Err(Error::schema(&path, format!("format_version: {} is not supported", m.format_version)));
    }
    if m.n_frames != m.frames.len() {
        return Err(Error::schema(&path, format!("n_frames: {} but frames lists {}", m.n_frames, m.frames.len())));
    }
    if !(m.frame_interval.is_finite() && m.frame_interval > 0.0) {
        return Err(Error::schema(&path, format!("frame_interval: must be > 0, got {}", m.frame_interval)));
    }
    let mut frames = Vec::with_capacity(m.frames.len());
    for (i, e) in m.frames.iter().enumerate() {
        if i > 0 && e.frame_index <= m.frames[i - 1].frame_index {
            return Err(Error::schema(&path, format!("frames[{i}].frame_index: {} is not increasing", e.frame_index)));
        }
        if !e.timestamp.is_finite() {
            return Err(Error::schema(&path, format!("frames[{i}].timestamp: must be finite")));
        }
        let cloud = match &e.dir {
            Some(name) => {
                check_dir_name(&path, name)?;
                Some(read_velocity_cloud(&dir.join(name), "", None)?)
            }
            None => None,
        };
        frames.push(EstimateFrame { frame_index: e.frame_index, timestamp: e.timestamp, cloud });
    }
    Ok(EstimateSet { frame_interval: m.frame_interval, settings: m.settings, frames })
}
