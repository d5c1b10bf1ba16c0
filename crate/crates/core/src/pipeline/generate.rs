//! Two-stage generation: interacting parts first, then the rest of the body
//! with the interacting parts overwritten after every step.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::{Conditioner, ModelBundle};
use crate::denoiser::{ConditionBundle, DropFlags, X0Predictor};
use crate::diffusion::{cfg_combine, compose_overwrite, reverse_step, rng_stream, standard_normal, DiffusionSchedule};
use crate::error::{Error, Result};
use crate::gcn::GcnParams;
use crate::motion::PartMask;
use crate::semantics::{extract_with_retry, fallback_rule_extractor, Extraction, InteractionSpec, LlmClient};

/// Turns a description into an interaction spec.
pub trait SpecExtractor {
    fn extract(&self, text: &str) -> Extraction;
}

pub struct FallbackExtractor;

impl SpecExtractor for FallbackExtractor {
    fn extract(&self, text: &str) -> Extraction {
        Extraction { spec: fallback_rule_extractor(text), transcripts: Vec::new() }
    }
}

pub struct LlmExtractor<'a> {
    pub client: &'a dyn LlmClient,
}

impl SpecExtractor for LlmExtractor<'_> {
    fn extract(&self, text: &str) -> Extraction {
        extract_with_retry(text, self.client)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub text: String,
    pub seed: u64,
    pub frames: usize,
    pub guidance_scale: f64,
    pub stochastic: bool,
    /// Run stage 1 for interactive specs; when off every request takes the
    /// single-stage path.
    pub two_stage: bool,
    /// Feed the graph feature to stage 2.
    pub spatial_guidance: bool,
}

impl GenerationRequest {
    pub fn new(text: &str, seed: u64, frames: usize) -> Self {
        Self {
            text: text.into(),
            seed,
            frames,
            guidance_scale: 1.0,
            stochastic: true,
            two_stage: true,
            spatial_guidance: true,
        }
    }

    pub fn with_guidance(mut self, scale: f64) -> Self {
        self.guidance_scale = scale;
        self
    }

    pub fn deterministic(mut self) -> Self {
        self.stochastic = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostic {
    pub stage: u8,
    pub t: usize,
    /// Root mean square of the clean-motion estimate.
    pub x0_rms: f64,
    /// Root mean square of the sample after the step.
    pub sample_rms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationTrace {
    pub request: GenerationRequest,
    pub spec: InteractionSpec,
    pub mask: PartMask,
    pub stage1: Option<Array2<f64>>,
    pub spatial: Option<Array1<f64>>,
    pub motion: Array2<f64>,
    pub steps: Vec<StepDiagnostic>,
}

#[derive(Serialize)]
struct TraceFile<'a> {
    request: &'a GenerationRequest,
    spec: &'a InteractionSpec,
    parts: Vec<&'static str>,
    mask: Vec<u8>,
    stage1: Option<Vec<Vec<f64>>>,
    spatial: Option<Vec<f64>>,
    motion: Vec<Vec<f64>>,
    steps: &'a [StepDiagnostic],
}

fn rows(x: &Array2<f64>) -> Vec<Vec<f64>> {
    x.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl GenerationTrace {
    pub fn to_json(&self) -> String {
        let file = TraceFile {
            request: &self.request,
            spec: &self.spec,
            parts: self.mask.parts().iter().map(|p| p.name()).collect(),
            mask: self.mask.bits().iter().map(|&b| b as u8).collect(),
            stage1: self.stage1.as_ref().map(rows),
            spatial: self.spatial.as_ref().map(|s| s.to_vec()),
            motion: rows(&self.motion),
            steps: &self.steps,
        };
        serde_json::to_string_pretty(&file).expect("trace serializes")
    }
}

/// Reverse-process settings shared by both stages.
#[derive(Debug, Clone, Copy)]
pub struct Sampler<'a> {
    pub schedule: &'a DiffusionSchedule,
    pub frames: usize,
    pub guidance_scale: f64,
    pub stochastic: bool,
}

fn rms(x: &Array2<f64>) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

fn guided(model: &dyn X0Predictor, x: &Array2<f64>, t: usize, conds: &ConditionBundle, scale: f64) -> Result<Array2<f64>> {
    let c = model.predict_x0(x.view(), t, conds)?;
    if scale == 1.0 {
        return Ok(c);
    }
    let u = model.predict_x0(x.view(), t, &conds.unconditional())?;
    cfg_combine(&u, &c, scale)
}

/// Shared reverse loop; `overwrite` replaces masked dims of each clean
/// estimate and of the final sample.
fn reverse(
    model: &dyn X0Predictor,
    conds: &ConditionBundle,
    sampler: &Sampler<'_>,
    seed: u64,
    stage: u8,
    overwrite: Option<(&Array2<f64>, &PartMask)>,
    diag: &mut Vec<StepDiagnostic>,
) -> Result<Array2<f64>> {
    if sampler.frames == 0 {
        return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
    }
    let d = model.pose_dim();
    let mut rng = rng_stream(seed, stage as u64);
    let mut x = standard_normal(ndarray::Ix2(sampler.frames, d), &mut rng);
    for t in (1..=sampler.schedule.steps()).rev() {
        let mut x0 = guided(model, &x, t, conds, sampler.guidance_scale)?;
        if let Some((x_inter, m)) = overwrite {
            x0 = compose_overwrite(x0.view(), x_inter.view(), m)?;
        }
        x = reverse_step(&x, &x0, t, sampler.schedule, &mut rng, sampler.stochastic)?;
        diag.push(StepDiagnostic { stage, t, x0_rms: rms(&x0), sample_rms: rms(&x) });
    }
    if let Some((x_inter, m)) = overwrite {
        x = compose_overwrite(x.view(), x_inter.view(), m)?;
    }
    Ok(x)
}

/// Interactive motion for the spec's parts; only mask dims are meaningful.
pub fn stage1_generate(
    conditioner: &Conditioner,
    model: &dyn X0Predictor,
    text: &str,
    spec: &InteractionSpec,
    sampler: &Sampler<'_>,
    seed: u64,
    diag: &mut Vec<StepDiagnostic>,
) -> Result<Array2<f64>> {
    if spec.is_none() {
        return Err(Error::InvalidArgument("stage 1 needs at least one interacting part".into()));
    }
    let mask = conditioner.mask(spec)?;
    let conds = conditioner.stage1_conditions(text, spec, &mask);
    reverse(model, &conds, sampler, seed, 1, None, diag)
}

/// Whole-body motion whose mask dims equal `x_inter` exactly. With an empty
/// mask this is plain conditional generation.
#[allow(clippy::too_many_arguments)]
pub fn stage2_generate(
    conditioner: &Conditioner,
    model: &dyn X0Predictor,
    gcn: Option<&GcnParams>,
    text: &str,
    spec: &InteractionSpec,
    x_inter: &Array2<f64>,
    mask: &PartMask,
    sampler: &Sampler<'_>,
    seed: u64,
    diag: &mut Vec<StepDiagnostic>,
) -> Result<(Array2<f64>, Option<Array1<f64>>)> {
    if x_inter.dim() != (sampler.frames, conditioner.pose_dim()) {
        return Err(Error::shape(
            "interactive motion",
            format!("({}, {})", sampler.frames, conditioner.pose_dim()),
            format!("{:?}", x_inter.dim()),
        ));
    }
    let spatial = match gcn {
        Some(g) if mask.popcount() > 0 => Some(conditioner.spatial_feature(g, x_inter.view(), mask)?.0),
        _ => None,
    };
    let conds = conditioner.stage2_conditions(text, spec, mask, spatial.clone());
    let out = reverse(model, &conds, sampler, seed, 2, Some((x_inter, mask)), diag)?;
    Ok((out, spatial))
}

/// Sampling with every condition dropped.
pub fn unconditional_generate(
    conditioner: &Conditioner,
    model: &dyn X0Predictor,
    sampler: &Sampler<'_>,
    seed: u64,
) -> Result<Array2<f64>> {
    let empty = InteractionSpec::none("");
    let mask = PartMask::from_bits(vec![false; conditioner.pose_dim()]);
    let conds = conditioner.stage2_conditions("", &empty, &mask, None).with_drop(DropFlags::ALL);
    let plain = Sampler { guidance_scale: 1.0, ..*sampler };
    reverse(model, &conds, &plain, seed, 2, None, &mut Vec::new())
}

/// Extraction, then either the single-stage path ('none' spec) or stage 1
/// followed by stage 2.
pub fn generate(
    request: &GenerationRequest,
    extractor: &dyn SpecExtractor,
    conditioner: &Conditioner,
    stage1: &dyn X0Predictor,
    stage2: &dyn X0Predictor,
    gcn: Option<&GcnParams>,
    schedule: &DiffusionSchedule,
) -> Result<GenerationTrace> {
    let spec = extractor.extract(&request.text).spec;
    let sampler = Sampler {
        schedule,
        frames: request.frames,
        guidance_scale: request.guidance_scale,
        stochastic: request.stochastic,
    };
    let mut steps = Vec::new();
    let interactive = !spec.is_none() && request.two_stage;
    let (mask, stage1_out) = if interactive {
        let mask = conditioner.mask(&spec)?;
        let x_inter = stage1_generate(conditioner, stage1, &request.text, &spec, &sampler, request.seed, &mut steps)?;
        (mask, Some(x_inter))
    } else {
        (PartMask::from_bits(vec![false; conditioner.pose_dim()]), None)
    };
    let zeros = Array2::zeros((request.frames, conditioner.pose_dim()));
    let x_inter = stage1_out.as_ref().unwrap_or(&zeros);
    let gcn = if request.spatial_guidance { gcn } else { None };
    // The single-stage path conditions on the full text in place of a residual.
    let stage2_spec = if interactive { spec.clone() } else { InteractionSpec::none(&request.text) };
    let (motion, spatial) = stage2_generate(
        conditioner, stage2, gcn, &request.text, &stage2_spec, x_inter, &mask, &sampler, request.seed, &mut steps,
    )?;
    Ok(GenerationTrace { request: request.clone(), spec, mask, stage1: stage1_out, spatial, motion, steps })
}

impl ModelBundle {
    pub fn conditioner(&self) -> Conditioner {
        Conditioner::new(&self.config)
    }

    pub fn generate(&self, request: &GenerationRequest, extractor: &dyn SpecExtractor) -> Result<GenerationTrace> {
        let schedule = self.config.schedule()?;
        generate(
            request,
            extractor,
            &self.conditioner(),
            &self.stage1,
            &self.stage2.denoiser,
            Some(&self.stage2.gcn),
            &schedule,
        )
    }

    pub fn generate_baseline(&self, frames: usize, seed: u64) -> Result<Array2<f64>> {
        let baseline = self
            .baseline
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("bundle has no baseline model".into()))?;
        let schedule = self.config.schedule()?;
        let sampler = Sampler { schedule: &schedule, frames, guidance_scale: 1.0, stochastic: self.config.sample.stochastic };
        unconditional_generate(&self.conditioner(), &baseline.denoiser, &sampler, seed)
    }
}
