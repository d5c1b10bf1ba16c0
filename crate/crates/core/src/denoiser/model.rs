//! Frame-wise residual MLP predicting clean motion from a noisy sequence.
//!
//! Each frame row is concatenated with a frame-position sinusoid and the
//! per-sample condition vector `[time | text | instruction | mask | spatial]`.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::embed::{sinusoid, time_embed};
use super::linear::{relu, relu_backward, silu, silu_grad, Linear};
use super::params::{ParamSet, TensorMut, TensorRef};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiserConfig {
    pub pose_dim: usize,
    pub width: usize,
    pub depth: usize,
    /// Width of the timestep and frame-position sinusoids.
    pub embed_dim: usize,
    /// Width of text and instruction embeddings.
    pub text_dim: usize,
    /// Width of each projected condition slot.
    pub cond_dim: usize,
    /// Number of diffusion steps the time embedding accepts.
    pub steps: usize,
    /// Whether a spatial-feature slot is present.
    pub spatial: bool,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            pose_dim: 263,
            width: 128,
            depth: 4,
            embed_dim: 64,
            text_dim: 128,
            cond_dim: 64,
            steps: 1000,
            spatial: false,
        }
    }
}

impl DenoiserConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pose_dim", self.pose_dim),
            ("width", self.width),
            ("embed_dim", self.embed_dim),
            ("text_dim", self.text_dim),
            ("cond_dim", self.cond_dim),
            ("steps", self.steps),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::Config(format!("denoiser {name} must be positive")));
            }
        }
        Ok(())
    }

    fn num_slots(&self) -> usize {
        if self.spatial {
            4
        } else {
            3
        }
    }

    /// Width of the per-sample condition vector (time slot included).
    pub fn cond_vec_dim(&self) -> usize {
        self.embed_dim + self.num_slots() * self.cond_dim
    }

    pub fn input_dim(&self) -> usize {
        self.pose_dim + self.embed_dim + self.cond_vec_dim()
    }
}

/// Per-condition dropout flags; a dropped condition contributes zeros.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropFlags {
    pub text: bool,
    pub mask: bool,
    pub instruction: bool,
    pub spatial: bool,
}

impl DropFlags {
    pub const NONE: Self = Self { text: false, mask: false, instruction: false, spatial: false };
    pub const ALL: Self = Self { text: true, mask: true, instruction: true, spatial: true };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionBundle {
    pub text: Array1<f64>,
    /// Mask bits as 0/1 over pose dims.
    pub mask: Array1<f64>,
    pub instruction: Array1<f64>,
    pub spatial: Option<Array1<f64>>,
    pub drop: DropFlags,
}

impl ConditionBundle {
    pub fn new(text: Array1<f64>, mask: Array1<f64>, instruction: Array1<f64>) -> Self {
        Self { text, mask, instruction, spatial: None, drop: DropFlags::NONE }
    }

    pub fn with_spatial(mut self, spatial: Array1<f64>) -> Self {
        self.spatial = Some(spatial);
        self
    }

    pub fn with_drop(mut self, drop: DropFlags) -> Self {
        self.drop = drop;
        self
    }

    /// Same contents with every condition dropped.
    pub fn unconditional(&self) -> Self {
        self.clone().with_drop(DropFlags::ALL)
    }
}

/// Anything that maps `(x_t, t, conditions)` to a clean-motion estimate.
pub trait X0Predictor {
    fn pose_dim(&self) -> usize;
    fn predict_x0(&self, x_t: ArrayView2<'_, f64>, t: usize, conds: &ConditionBundle) -> Result<Array2<f64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserParams {
    pub config: DenoiserConfig,
    pub time_proj: Linear,
    pub text_proj: Linear,
    pub instr_proj: Linear,
    pub mask_proj: Linear,
    pub input: Linear,
    pub blocks: Vec<Linear>,
    pub output: Linear,
}

impl DenoiserParams {
    pub fn zeros(config: &DenoiserConfig) -> Result<Self> {
        config.validate()?;
        let c = config;
        Ok(Self {
            config: c.clone(),
            time_proj: Linear::zeros(c.embed_dim, c.embed_dim),
            text_proj: Linear::zeros(c.text_dim, c.cond_dim),
            instr_proj: Linear::zeros(c.text_dim, c.cond_dim),
            mask_proj: Linear::zeros(c.pose_dim, c.cond_dim),
            input: Linear::zeros(c.input_dim(), c.width),
            blocks: (0..c.depth).map(|_| Linear::zeros(c.width, c.width)).collect(),
            output: Linear::zeros(c.width, c.pose_dim),
        })
    }

    pub fn init<R: Rng + ?Sized>(config: &DenoiserConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let c = config;
        Ok(Self {
            config: c.clone(),
            time_proj: Linear::init(c.embed_dim, c.embed_dim, rng),
            text_proj: Linear::init(c.text_dim, c.cond_dim, rng),
            instr_proj: Linear::init(c.text_dim, c.cond_dim, rng),
            mask_proj: Linear::init(c.pose_dim, c.cond_dim, rng),
            input: Linear::init(c.input_dim(), c.width, rng),
            blocks: (0..c.depth).map(|_| Linear::init(c.width, c.width, rng)).collect(),
            output: Linear::init(c.width, c.pose_dim, rng),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config).expect("config already validated")
    }

    fn check_conds(&self, conds: &ConditionBundle) -> Result<()> {
        let c = &self.config;
        check_len("text embedding", c.text_dim, conds.text.len())?;
        check_len("instruction embedding", c.text_dim, conds.instruction.len())?;
        check_len("mask bits", c.pose_dim, conds.mask.len())?;
        match (&conds.spatial, c.spatial) {
            (Some(s), true) => check_len("spatial feature", c.cond_dim, s.len()),
            (Some(_), false) => Err(Error::InvalidArgument(
                "spatial feature given to a model without a spatial slot".into(),
            )),
            (None, _) => Ok(()),
        }
    }

    /// Forward pass over a batch; returns the prediction rows stacked in
    /// batch order plus everything backward needs.
    pub fn forward_batch(&self, batch: &[DenoiserInput<'_>]) -> Result<(Array2<f64>, ForwardCache)> {
        if let Some(name) = self.first_non_finite() {
            return Err(Error::NonFinite(format!("denoiser parameter {name}")));
        }
        let c = &self.config;
        let rows: usize = batch.iter().map(|b| b.x_t.nrows()).sum();
        let mut input = Array2::zeros((rows, c.input_dim()));
        let mut samples = Vec::with_capacity(batch.len());
        let mut offset = 0;
        for item in batch {
            let (t_len, d) = item.x_t.dim();
            if d != c.pose_dim {
                return Err(Error::shape("x_t", format!("[*, {}]", c.pose_dim), format!("[{t_len}, {d}]")));
            }
            self.check_conds(item.conds)?;
            let temb = time_embed(item.t, c.steps, c.embed_dim)?;
            let time_pre = self.time_proj.forward_vec(temb.view());
            let cond = self.cond_vector(item.conds, &time_pre);
            let range = offset..offset + t_len;
            let mut block = input.slice_mut(s![range.clone(), ..]);
            block.slice_mut(s![.., ..c.pose_dim]).assign(&item.x_t);
            for f in 0..t_len {
                block
                    .slice_mut(s![f, c.pose_dim..c.pose_dim + c.embed_dim])
                    .assign(&sinusoid(f as f64, c.embed_dim));
            }
            block.slice_mut(s![.., c.pose_dim + c.embed_dim..]).assign(&cond);
            samples.push(SampleCache { rows: range, temb, time_pre });
            offset += t_len;
        }

        let mut pre = vec![self.input.forward(input.view())];
        let mut h = pre[0].clone();
        relu(&mut h);
        let mut hidden = vec![h];
        for block in &self.blocks {
            let z = block.forward(hidden.last().unwrap().view());
            let mut a = z.clone();
            relu(&mut a);
            a += hidden.last().unwrap();
            pre.push(z);
            hidden.push(a);
        }
        let out = self.output.forward(hidden.last().unwrap().view());
        Ok((out, ForwardCache { input, pre, hidden, samples }))
    }

    fn cond_vector(&self, conds: &ConditionBundle, time_pre: &Array1<f64>) -> Array1<f64> {
        let c = &self.config;
        let mut v = Array1::zeros(c.cond_vec_dim());
        v.slice_mut(s![..c.embed_dim]).assign(&time_pre.mapv(silu));
        let slot = |k: usize| c.embed_dim + k * c.cond_dim..c.embed_dim + (k + 1) * c.cond_dim;
        if !conds.drop.text {
            v.slice_mut(s![slot(0)]).assign(&self.text_proj.forward_vec(conds.text.view()));
        }
        if !conds.drop.instruction {
            v.slice_mut(s![slot(1)]).assign(&self.instr_proj.forward_vec(conds.instruction.view()));
        }
        if !conds.drop.mask {
            v.slice_mut(s![slot(2)]).assign(&mask_project(conds.mask.view(), &self.mask_proj).expect("checked"));
        }
        if c.spatial && !conds.drop.spatial {
            if let Some(sp) = &conds.spatial {
                v.slice_mut(s![slot(3)]).assign(sp);
            }
        }
        v
    }

    /// Backpropagates `d_out` (same shape as the forward output). Returns
    /// parameter gradients and, per sample, the gradient with respect to the
    /// spatial feature when that slot was active.
    pub fn backward_batch(
        &self,
        batch: &[DenoiserInput<'_>],
        cache: &ForwardCache,
        d_out: ArrayView2<'_, f64>,
    ) -> Result<(DenoiserParams, Vec<Option<Array1<f64>>>)> {
        let c = &self.config;
        if d_out.dim() != (cache.input.nrows(), c.pose_dim) {
            return Err(Error::shape(
                "output gradient",
                format!("[{}, {}]", cache.input.nrows(), c.pose_dim),
                format!("{:?}", d_out.shape()),
            ));
        }
        let mut g = self.zeros_like();
        let last = cache.hidden.last().unwrap();
        let mut dh = self.output.backward(last.view(), d_out, &mut g.output);
        for (k, block) in self.blocks.iter().enumerate().rev() {
            let mut dz = dh.clone();
            relu_backward(&cache.pre[k + 1], &mut dz);
            dh += &block.backward(cache.hidden[k].view(), dz.view(), &mut g.blocks[k]);
        }
        relu_backward(&cache.pre[0], &mut dh);
        let d_input = self.input.backward(cache.input.view(), dh.view(), &mut g.input);

        let cond_start = c.pose_dim + c.embed_dim;
        let slot = |k: usize| cond_start + c.embed_dim + k * c.cond_dim..cond_start + c.embed_dim + (k + 1) * c.cond_dim;
        let mut d_spatial = Vec::with_capacity(batch.len());
        for (item, sc) in batch.iter().zip(&cache.samples) {
            let rows = d_input.slice(s![sc.rows.clone(), ..]);
            let d_cond = rows.sum_axis(Axis(0));
            let d_time: Array1<f64> = d_cond
                .slice(s![cond_start..cond_start + c.embed_dim])
                .iter()
                .zip(sc.time_pre.iter())
                .map(|(&d, &z)| d * silu_grad(z))
                .collect();
            self.time_proj.backward_vec(sc.temb.view(), d_time.view(), &mut g.time_proj);
            let conds = item.conds;
            if !conds.drop.text {
                self.text_proj.backward_vec(conds.text.view(), d_cond.slice(s![slot(0)]), &mut g.text_proj);
            }
            if !conds.drop.instruction {
                self.instr_proj
                    .backward_vec(conds.instruction.view(), d_cond.slice(s![slot(1)]), &mut g.instr_proj);
            }
            if !conds.drop.mask {
                self.mask_proj.backward_vec(conds.mask.view(), d_cond.slice(s![slot(2)]), &mut g.mask_proj);
            }
            let ds = if c.spatial && !conds.drop.spatial && conds.spatial.is_some() {
                Some(d_cond.slice(s![slot(3)]).to_owned())
            } else {
                None
            };
            d_spatial.push(ds);
        }
        Ok((g, d_spatial))
    }

    /// Adds `scale * other` into `self`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data.iter_mut().zip(b.data) {
                *x += scale * y;
            }
        }
    }
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::shape(what, format!("[{expected}]"), format!("[{actual}]")))
    }
}

/// Affine map of mask bits to a condition vector.
pub fn mask_project(bits: ArrayView1<'_, f64>, proj: &Linear) -> Result<Array1<f64>> {
    check_len("mask bits", proj.input_dim(), bits.len())?;
    Ok(proj.forward_vec(bits))
}

pub struct DenoiserInput<'a> {
    pub x_t: ArrayView2<'a, f64>,
    pub t: usize,
    pub conds: &'a ConditionBundle,
}

struct SampleCache {
    rows: Range<usize>,
    temb: Array1<f64>,
    time_pre: Array1<f64>,
}

pub struct ForwardCache {
    input: Array2<f64>,
    pre: Vec<Array2<f64>>,
    hidden: Vec<Array2<f64>>,
    samples: Vec<SampleCache>,
}

impl ForwardCache {
    pub fn sample_rows(&self, i: usize) -> Range<usize> {
        self.samples[i].rows.clone()
    }
}

impl X0Predictor for DenoiserParams {
    fn pose_dim(&self) -> usize {
        self.config.pose_dim
    }

    fn predict_x0(&self, x_t: ArrayView2<'_, f64>, t: usize, conds: &ConditionBundle) -> Result<Array2<f64>> {
        let (out, _) = self.forward_batch(&[DenoiserInput { x_t: x_t.view(), t, conds }])?;
        Ok(out)
    }
}

impl ParamSet for DenoiserParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        self.time_proj.push_refs("time_proj", &mut out);
        self.text_proj.push_refs("text_proj", &mut out);
        self.instr_proj.push_refs("instr_proj", &mut out);
        self.mask_proj.push_refs("mask_proj", &mut out);
        self.input.push_refs("input", &mut out);
        for (i, b) in self.blocks.iter().enumerate() {
            b.push_refs(&format!("blocks.{i}"), &mut out);
        }
        self.output.push_refs("output", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        self.time_proj.push_muts("time_proj", &mut out);
        self.text_proj.push_muts("text_proj", &mut out);
        self.instr_proj.push_muts("instr_proj", &mut out);
        self.mask_proj.push_muts("mask_proj", &mut out);
        self.input.push_muts("input", &mut out);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            b.push_muts(&format!("blocks.{i}"), &mut out);
        }
        self.output.push_muts("output", &mut out);
        out
    }
}
