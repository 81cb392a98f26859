use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::format::FormatError;

/// Failures of the file layer and the command line. Every variant names the
/// file it concerns.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    /// Structured-text problems: syntax, missing or unknown fields, bad values.
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Core {
        path: PathBuf,
        #[source]
        source: pointvel_core::Error,
    },
    #[error("frame count mismatch: {est_path} has {est} frames, {truth_path} has {truth} frames")]
    FrameCount { est_path: PathBuf, est: usize, truth_path: PathBuf, truth: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn format(path: impl AsRef<Path>, source: FormatError) -> Self {
        Self::Format { path: path.as_ref().to_path_buf(), source }
    }

    pub fn schema(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        Self::Schema { path: path.as_ref().to_path_buf(), message: message.into() }
    }

    pub fn core(path: impl AsRef<Path>, source: pointvel_core::Error) -> Self {
        Self::Core { path: path.as_ref().to_path_buf(), source }
    }

    /// Stable category name used in the machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io { .. } => "io",
            Self::Format { .. } => "format",
            Self::Schema { .. } => "schema",
            Self::Core { .. } => "config",
            Self::FrameCount { .. } => "mismatch",
        }
    }

    /// `error kind=<kind> message=<text>` on a single line.
    pub fn report_line(&self) -> String {
        let text = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error kind={} message={}", self.kind(), text)
    }
}

/// Turns a TOML decoding error into a one-line schema error with line and
/// column.
pub(crate) fn toml_error(path: &Path, text: &str, err: &toml::de::Error) -> Error {
    let location = err
        .span()
        .map(|span| {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            format!(" (line {line}, column {col})")
        })
        .unwrap_or_default();
    Error::schema(path, format!("{}{location}", err.message().trim()))
}
