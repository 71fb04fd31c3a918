//! Pipeline configuration, read from TOML.

use std::path::Path;

use planaris_core::alignment::DEFAULT_UP_THRESHOLD;
use planaris_core::mclip::ClipConfig;
use planaris_core::planemesh::DEFAULT_AXIS_TOL_DEG;
use planaris_core::ransac::RansacConfig;
use planaris_core::segmentation::SegmentationConfig;
use planaris_core::vtrans::VTransConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MeshFormat {
    #[default]
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Ply => "ply",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentConfig {
    pub skip: bool,
    /// `|c|` above which a primitive counts as horizontal for the up vote.
    pub up_threshold: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            skip: false,
            up_threshold: DEFAULT_UP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Neighbours used to estimate normals when the input has none.
    pub normals_k: usize,
    /// Angle within which rectangle normals snap to a coordinate axis.
    pub axis_tol_deg: f64,
    /// Statistical outlier removal on the exported non-structured cloud.
    pub remove_outliers: bool,
    pub mesh_format: MeshFormat,
    /// Reuse detected primitives from `<output>/.cache` when inputs match.
    pub cache: bool,
    pub ransac: RansacConfig,
    pub alignment: AlignmentConfig,
    pub segmentation: SegmentationConfig,
    pub vtrans: VTransConfig,
    pub clip: ClipConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            normals_k: 16,
            axis_tol_deg: DEFAULT_AXIS_TOL_DEG,
            remove_outliers: true,
            mesh_format: MeshFormat::Obj,
            cache: true,
            ransac: RansacConfig::default(),
            alignment: AlignmentConfig::default(),
            segmentation: SegmentationConfig::default(),
            vtrans: VTransConfig::default(),
            clip: ClipConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error(transparent)]
    Invalid(#[from] planaris_core::Error),
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), planaris_core::Error> {
        let bad = |m: &str| Err(planaris_core::Error::InvalidConfig(m.into()));
        self.ransac.validate()?;
        self.segmentation.validate()?;
        self.vtrans.validate()?;
        if self.normals_k < 3 {
            return bad("normals_k must be at least 3");
        }
        if !(0.0..=90.0).contains(&self.axis_tol_deg) {
            return bad("axis_tol_deg must lie in [0, 90]");
        }
        if !(self.alignment.up_threshold > 0.0 && self.alignment.up_threshold <= 1.0) {
            return bad("up_threshold must lie in (0, 1]");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_partial_files() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
        let cfg = PipelineConfig::from_toml_str("axis_tol_deg = 2.0\n[clip]\nth_clip = 25\n").unwrap();
        assert_eq!(cfg.clip.th_clip, 25);
        assert_eq!(cfg.axis_tol_deg, 2.0);
        assert_eq!(cfg.vtrans, VTransConfig::default());
        assert!(PipelineConfig::from_toml_str("bogus = 1\n").is_err());
    }
}
