//! Training and sampling configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::denoiser::DenoiserConfig;
use crate::diffusion::{make_schedule, DiffusionSchedule, ScheduleKind};
use crate::error::{Error, Result};
use crate::gcn::GcnConfig;
use crate::motion::PoseLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { steps: 50, beta_start: 1e-4, beta_end: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub width: usize,
    pub depth: usize,
    pub embed_dim: usize,
    pub text_dim: usize,
    pub cond_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let d = DenoiserConfig::default();
        Self { width: d.width, depth: d.depth, embed_dim: d.embed_dim, text_dim: d.text_dim, cond_dim: d.cond_dim }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub hidden: usize,
    pub gcn_layers: usize,
    pub conv_layers: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { hidden: 16, gcn_layers: 2, conv_layers: 2, kernel: 3, stride: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    /// Probability of dropping all conditions of an example together.
    pub cond_dropout: f64,
    /// Stage 2 trains on ground-truth interactive motion when set, otherwise
    /// on stage-1 samples.
    pub teacher_forcing: bool,
    /// Train an unconditional model alongside for comparison.
    pub baseline: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 32,
            lr: 1e-3,
            optimizer: OptimizerKind::Adam,
            cond_dropout: 0.1,
            teacher_forcing: true,
            baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub frames: usize,
    pub guidance_scale: f64,
    pub stochastic: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { frames: 16, guidance_scale: 2.5, stochastic: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub dataset: Option<PathBuf>,
    pub schedule: ScheduleConfig,
    pub model: ModelConfig,
    pub gcn: GraphConfig,
    pub train: TrainConfig,
    pub sample: SampleConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        self.denoiser_config(true).validate()?;
        self.gcn_config(&PoseLayout::canonical()).validate()?;
        let t = &self.train;
        if t.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be positive".into()));
        }
        if !(t.lr >= 0.0 && t.lr.is_finite()) {
            return Err(Error::Config("train.lr must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&t.cond_dropout) {
            return Err(Error::Config("train.cond_dropout must lie in [0, 1]".into()));
        }
        if self.sample.frames == 0 || !self.sample.guidance_scale.is_finite() {
            return Err(Error::Config("sample.frames must be positive and guidance_scale finite".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<DiffusionSchedule> {
        let s = &self.schedule;
        make_schedule(s.steps, s.beta_start, s.beta_end, ScheduleKind::Linear).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn denoiser_config(&self, spatial: bool) -> DenoiserConfig {
        let m = &self.model;
        DenoiserConfig {
            pose_dim: PoseLayout::canonical().total_dim(),
            width: m.width,
            depth: m.depth,
            embed_dim: m.embed_dim,
            text_dim: m.text_dim,
            cond_dim: m.cond_dim,
            steps: self.schedule.steps,
            spatial,
        }
    }

    pub fn gcn_config(&self, layout: &PoseLayout) -> GcnConfig {
        let g = &self.gcn;
        GcnConfig {
            num_joints: layout.num_joints(),
            num_subsets: crate::motion::GraphPart::ALL.len() + 1,
            hidden: g.hidden,
            gcn_layers: g.gcn_layers,
            conv_layers: g.conv_layers,
            kernel: g.kernel,
            stride: g.stride,
            cond_dim: self.model.cond_dim,
        }
    }
}
