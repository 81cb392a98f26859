use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scatterer {index}: {reason}")]
    Scatterer { index: usize, reason: String },

    #[error("{what}: expected shape {expected:?}, got {actual:?}")]
    Shape {
        what: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("{axis} bin {bin} out of range (axis has {len} bins)")]
    BinOutOfRange {
        axis: &'static str,
        bin: usize,
        len: usize,
    },

    #[error("point at the origin has no direction")]
    ZeroRange,

    #[error("direction vector is not unit length (norm {0})")]
    NonUnitDirection(f64),

    #[error("degenerate geometry: condition number {0:e}")]
    DegenerateGeometry(f64),

    #[error("frame {frame} requested but the scene has {n_frames} frames")]
    FrameOutOfRange { frame: usize, n_frames: usize },

    #[error("point {0} carries no source label")]
    Unlabeled(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{0}")]
    Empty(&'static str),

    #[error("track {track} has no frame {frame}")]
    MissingFrame { track: usize, frame: usize },
}
