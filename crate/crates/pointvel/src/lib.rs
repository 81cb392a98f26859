//! File formats, scene files and the command line around `pointvel-core`.
//!
//! - [`format`]: the little-endian binary tensor container.
//! - [`sequence`]: frame sequence and estimate directories.
//! - [`scene`]: TOML scene files and the bundled demo scene.
//! - [`pipeline`]: simulate / process / evaluate as library calls.
//! - [`report`], [`plot`]: metrics reports and speed curves.
//! - [`cli`]: the `pointvel` binary.

pub mod cli;
pub mod error;
pub mod files;
pub mod format;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod scene;
pub mod sequence;

pub use error::{Error, Result};
pub use pointvel_core as core;
