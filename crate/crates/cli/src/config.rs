use std::fs;
use std::path::{Path, PathBuf};

use refine_core::pipeline::RefineParams;
use refine_core::raster::DEFAULT_MASK_THRESHOLD;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Settings shared by the subcommands. Loaded from a JSON file when given;
/// command-line flags override file values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub erosion_radius: usize,
    pub dilation_radius: usize,
    pub smooth_gradient: bool,
    pub mask_threshold: u8,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub overlay: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            erosion_radius: 3,
            dilation_radius: 3,
            smooth_gradient: true,
            mask_threshold: DEFAULT_MASK_THRESHOLD,
            seed: 0,
            output: None,
            overlay: None,
            report: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: invalid config: {e}", path.display())))
    }

    pub fn params(&self) -> RefineParams {
        RefineParams {
            erosion_radius: self.erosion_radius,
            dilation_radius: self.dilation_radius,
            smooth_gradient: self.smooth_gradient,
        }
    }
}

/// Flag values that, when present, replace config file values.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub erosion_radius: Option<usize>,
    pub dilation_radius: Option<usize>,
    pub no_smooth_gradient: bool,
    pub mask_threshold: Option<u8>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub overlay: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn resolve(&self, file: Option<&Path>) -> Result<PipelineConfig> {
        let mut cfg = match file {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.erosion_radius {
            cfg.erosion_radius = v;
        }
        if let Some(v) = self.dilation_radius {
            cfg.dilation_radius = v;
        }
        if self.no_smooth_gradient {
            cfg.smooth_gradient = false;
        }
        if let Some(v) = self.mask_threshold {
            cfg.mask_threshold = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if self.overlay.is_some() {
            cfg.overlay = self.overlay.clone();
        }
        if self.report.is_some() {
            cfg.report = self.report.clone();
        }
        Ok(cfg)
    }
}
