//! Trained parameter sets and how conditions are assembled for each stage.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use super::config::PipelineConfig;
use crate::denoiser::checkpoint::CheckpointFile;
use crate::denoiser::{
    ConditionBundle, DenoiserParams, HashedTextEncoder, ParamSet, TensorMut, TensorRef, TextEncoder,
};
use crate::error::{Error, Result};
use crate::gcn::{build_adjacency_subsets, AdjacencySubsets, GcnCache, GcnParams};
use crate::motion::{canonical_skeleton, part_mask, PartMask, PoseLayout, Skeleton};
use crate::semantics::InteractionSpec;

/// Stage-2 denoiser and the graph network trained with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Params {
    pub denoiser: DenoiserParams,
    pub gcn: GcnParams,
}

impl ParamSet for Stage2Params {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut t = self.denoiser.tensors();
        t.extend(self.gcn.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut t = self.denoiser.tensors_mut();
        t.extend(self.gcn.tensors_mut());
        t
    }
}

/// Fixed structures shared by training and generation.
#[derive(Debug, Clone)]
pub struct Conditioner {
    pub layout: PoseLayout,
    pub skeleton: Skeleton,
    pub adjacency: AdjacencySubsets,
    pub encoder: HashedTextEncoder,
}

impl Conditioner {
    pub fn new(config: &PipelineConfig) -> Self {
        let skeleton = canonical_skeleton();
        Self {
            layout: PoseLayout::canonical(),
            adjacency: build_adjacency_subsets(&skeleton),
            skeleton,
            encoder: HashedTextEncoder::new(config.model.text_dim),
        }
    }

    pub fn pose_dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Mask of the spec's parts; all zeros for the 'none' spec.
    pub fn mask(&self, spec: &InteractionSpec) -> Result<PartMask> {
        part_mask(spec.parts(), &self.layout, &self.skeleton)
    }

    /// Text, mask and interaction instruction.
    pub fn stage1_conditions(&self, text: &str, spec: &InteractionSpec, mask: &PartMask) -> ConditionBundle {
        ConditionBundle::new(
            self.encoder.encode(text),
            Array1::from(mask.to_f64()),
            self.encoder.encode(&spec.instruction_text()),
        )
    }

    /// Text, complemented mask, residual instruction and, when given, the
    /// spatial feature.
    pub fn stage2_conditions(
        &self,
        text: &str,
        spec: &InteractionSpec,
        mask: &PartMask,
        spatial: Option<Array1<f64>>,
    ) -> ConditionBundle {
        let mut c = ConditionBundle::new(
            self.encoder.encode(text),
            Array1::from(mask.complement().to_f64()),
            self.encoder.encode(spec.residual_text()),
        );
        c.spatial = spatial;
        c
    }

    /// Graph feature of the masked interactive motion.
    pub fn spatial_feature(
        &self,
        gcn: &GcnParams,
        x_inter: ArrayView2<'_, f64>,
        mask: &PartMask,
    ) -> Result<(Array1<f64>, GcnCache)> {
        let masked = masked_motion(x_inter, mask)?;
        gcn.spatial_condition(masked.view(), &self.layout, &self.adjacency)
    }
}

/// `m ⊙ x`, zero outside the mask.
pub fn masked_motion(x: ArrayView2<'_, f64>, mask: &PartMask) -> Result<Array2<f64>> {
    if x.ncols() != mask.len() {
        return Err(Error::shape("masked motion", mask.len(), x.ncols()));
    }
    let mut out = Array2::zeros(x.raw_dim());
    for d in mask.selected() {
        out.column_mut(d).assign(&x.column(d));
    }
    Ok(out)
}

pub const STAGE1_KIND: &str = "stage1";
pub const STAGE2_KIND: &str = "stage2";
pub const BASELINE_KIND: &str = "baseline";

pub const STAGE1_FILE: &str = "stage1.ckpt.json";
pub const STAGE2_FILE: &str = "stage2.ckpt.json";
pub const BASELINE_FILE: &str = "baseline.ckpt.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Everything generation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: PipelineConfig,
    pub stage1: DenoiserParams,
    pub stage2: Stage2Params,
    /// Stage-2-shaped model trained without conditions, for comparison.
    pub baseline: Option<Stage2Params>,
}

impl ModelBundle {
    pub fn init<R: Rng + ?Sized>(config: &PipelineConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let layout = PoseLayout::canonical();
        Ok(Self {
            config: config.clone(),
            stage1: DenoiserParams::init(&config.denoiser_config(false), rng)?,
            stage2: Stage2Params {
                denoiser: DenoiserParams::init(&config.denoiser_config(true), rng)?,
                gcn: GcnParams::init(&config.gcn_config(&layout), rng)?,
            },
            baseline: None,
        })
    }

    /// Writes the config and one checkpoint per model into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        write(CONFIG_FILE, self.config.to_toml_string())?;
        write(STAGE1_FILE, CheckpointFile::capture(STAGE1_KIND, &self.config, &self.stage1)?.to_json())?;
        write(STAGE2_FILE, CheckpointFile::capture(STAGE2_KIND, &self.config, &self.stage2)?.to_json())?;
        if let Some(b) = &self.baseline {
            write(BASELINE_FILE, CheckpointFile::capture(BASELINE_KIND, &self.config, b)?.to_json())?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| -> Result<Option<(CheckpointFile, String)>> {
            let p = dir.join(name);
            if !p.exists() {
                return Ok(None);
            }
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let origin = p.display().to_string();
            Ok(Some((CheckpointFile::from_json(&text, &origin)?, origin)))
        };
        let (s1, o1) = read(STAGE1_FILE)?.ok_or_else(|| Error::data(dir.join(STAGE1_FILE), "missing checkpoint"))?;
        let (s2, o2) = read(STAGE2_FILE)?.ok_or_else(|| Error::data(dir.join(STAGE2_FILE), "missing checkpoint"))?;
        let config: PipelineConfig = s1.config(&o1)?;
        config.validate()?;
        let mut bundle = Self::init(&config, &mut crate::diffusion::rng_stream(0, 0))?;
        expect_kind(&s1, STAGE1_KIND, &o1)?;
        expect_kind(&s2, STAGE2_KIND, &o2)?;
        s1.restore(&mut bundle.stage1, &o1)?;
        s2.restore(&mut bundle.stage2, &o2)?;
        if let Some((b, ob)) = read(BASELINE_FILE)? {
            expect_kind(&b, BASELINE_KIND, &ob)?;
            let mut params = bundle.stage2.clone();
            b.restore(&mut params, &ob)?;
            bundle.baseline = Some(params);
        }
        Ok(bundle)
    }
}

fn expect_kind(file: &CheckpointFile, kind: &str, origin: &str) -> Result<()> {
    if file.kind == kind {
        Ok(())
    } else {
        Err(Error::data(origin, format!("expected a {kind} checkpoint, found {}", file.kind)))
    }
}
