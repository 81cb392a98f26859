//! Scene files: one TOML document with `[radar]`, `[camera]` and `[scene]`
//! tables. Any field left out takes its default.

use std::path::Path;

use pointvel_core::{CameraModel, RadarConfig, SceneConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files::{parse_toml, read_text};

/// The bundled three-target demo scene.
pub const DEMO_SCENE: &str = include_str!("../scenes/demo.toml");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneFile {
    pub radar: RadarConfig,
    pub camera: CameraModel,
    pub scene: SceneConfig,
}

impl SceneFile {
    /// Parses and validates; `path` is only used in error messages.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let file: Self = parse_toml(path, text)?;
        file.validate(path)?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &read_text(path)?)
    }

    pub fn demo() -> Self {
        Self::parse(Path::new("<demo scene>"), DEMO_SCENE).expect("bundled demo scene is valid")
    }

    pub fn validate(&self, path: &Path) -> Result<()> {
        let tag = |table: &str, e: pointvel_core::Error| Error::schema(path, format!("[{table}] {e}"));
        self.radar.validate().map_err(|e| tag("radar", e))?;
        self.camera.validate().map_err(|e| tag("camera", e))?;
        self.scene.validate().map_err(|e| tag("scene", e))?;
        Ok(())
    }
}
