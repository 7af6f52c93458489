//! Experiment configuration, schema version 1.

use std::path::{Path, PathBuf};

use natmap_core::rigidity::RigidityConfig;
use natmap_core::{ScalarAlgebra, Space};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: ScalarAlgebra,
    pub p: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: ScalarAlgebra,
    pub m: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BusemannBlock {
    pub samples: usize,
    pub ray_time: f64,
}

impl Default for BusemannBlock {
    fn default() -> Self {
        BusemannBlock {
            samples: 100,
            ray_time: 15.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarycenterBlock {
    /// Measure CSV, relative to the config file.
    pub measure_file: PathBuf,
    #[serde(default = "default_isometries")]
    pub isometries: usize,
}

fn default_isometries() -> usize {
    10
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NatmapModel {
    /// Symmetric seed at `O`, boundary map of the inclusion.
    Symmetric,
    /// Random seed measure and perturbed boundary map.
    Random,
    /// Every atom sent into a small cap.
    Collapsing,
    /// Seed measure and boundary map read from CSV files.
    Files,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NatmapBlock {
    pub model: NatmapModel,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_file: Option<PathBuf>,
    /// Exponent of the density; the critical exponent of the source by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

fn default_points() -> usize {
    16
}

fn default_radius() -> f64 {
    0.5
}

fn default_spread() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    /// Overrides the dimension `k` of the source space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// CSV dump of the boundary scan samples, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_csv: Option<PathBuf>,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        SpectrumBlock {
            k: None,
            d: None,
            restarts: default_restarts(),
            margin: default_margin(),
            eps: default_eps(),
            samples_csv: None,
        }
    }
}

fn default_restarts() -> usize {
    32
}

fn default_margin() -> f64 {
    1e-6
}

fn default_eps() -> Vec<f64> {
    vec![1e-2, 1e-4, 1e-6]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub space: SpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub busemann_check: Option<BusemannBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barycenter: Option<BarycenterBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub natmap: Option<NatmapBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigidity: Option<RigidityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

/// A parsed config together with the directory that relative paths resolve against.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub dir: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Loaded, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let source = self.source()?;
        if let Some(t) = &self.target {
            if t.kind != self.space.kind {
                return Err(CliError::Config(format!(
                    "source is {} but target is {}; both must use the same algebra",
                    self.space.kind, t.kind
                )));
            }
            if t.m < self.space.p {
                return Err(CliError::Config(format!("target rank m = {} below source rank p = {}", t.m, source.rank())));
            }
        }
        Ok(())
    }

    pub fn source(&self) -> Result<Space, CliError> {
        Space::new(self.space.kind, self.space.p).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The target space, defaulting to the source.
    pub fn target(&self) -> Result<Space, CliError> {
        match &self.target {
            Some(t) => Space::new(t.kind, t.m).map_err(|e| CliError::Config(e.to_string())),
            None => self.source(),
        }
    }
}
