use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::body::read_json;
use crate::error::{Error, Result};
use crate::fit::FitConfig;
use crate::placement::CmaConfig;

/// Settings shared by all subcommands. Values present in a config file take
/// precedence over the corresponding command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scan: Option<PathBuf>,
    pub body: Option<PathBuf>,
    pub keypoints: Option<PathBuf>,
    pub skeleton: Option<PathBuf>,
    pub clips: Vec<PathBuf>,
    pub scene: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub fit: Option<FitConfig>,
    pub cma: Option<CmaConfig>,
    pub shape_samples: Option<usize>,
    pub shape_scale: Option<f64>,
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let cfg: PipelineConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every referenced input exists and the nested configs are consistent.
    pub fn validate(&self) -> Result<()> {
        let inputs = [
            ("scan", &self.scan),
            ("body", &self.body),
            ("keypoints", &self.keypoints),
            ("skeleton", &self.skeleton),
            ("scene", &self.scene),
        ];
        for (name, p) in inputs {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::InvalidArgument(format!("{name} path {} does not exist", p.display())));
                }
            }
        }
        for c in &self.clips {
            if !c.exists() {
                return Err(Error::InvalidArgument(format!("clip path {} does not exist", c.display())));
            }
        }
        if let Some(f) = &self.fit {
            f.validate()?;
        }
        if let Some(c) = &self.cma {
            c.validate()?;
        }
        if let Some(s) = self.shape_scale {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!("shape_scale {s} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// `config` when set, else `flag`.
pub fn pick<T: Clone>(config: &Option<T>, flag: Option<T>) -> Option<T> {
    config.clone().or(flag)
}
