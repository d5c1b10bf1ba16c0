//! Offline motion encoder aligned to text embeddings by a contrastive loop.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::denoiser::{adam_step, AdamState, Linear, ParamSet, TensorMut, TensorRef};
use crate::diffusion::rng_stream;
use crate::error::{Error, Result};

/// Added to each feature's spread before standardizing, so near-constant
/// dims do not amplify small deviations of generated motion.
const SCALE_FLOOR: f64 = 0.05;

/// Maps a pose sequence into the text embedding space.
pub trait MotionEmbedder {
    fn embed(&self, frames: ArrayView2<'_, f64>) -> Result<Array1<f64>>;
}

/// Per-dim temporal mean and standard deviation.
pub fn pooled_features(frames: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if frames.nrows() == 0 {
        return Err(Error::InvalidArgument("cannot pool an empty sequence".into()));
    }
    let mean = frames.mean_axis(Axis(0)).expect("non-empty");
    let std = frames.std_axis(Axis(0), 0.0);
    Ok(concatenate![Axis(0), mean, std])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMotionEncoder {
    pub center: Array1<f64>,
    pub scale: Array1<f64>,
    pub proj: Linear,
}

impl LinearMotionEncoder {
    fn standardized(&self, frames: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let f = pooled_features(frames)?;
        if f.len() != self.center.len() {
            return Err(Error::shape("pooled motion features", self.center.len(), f.len()));
        }
        Ok((f - &self.center) / &self.scale)
    }
}

impl MotionEmbedder for LinearMotionEncoder {
    fn embed(&self, frames: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        Ok(self.proj.forward_vec(self.standardized(frames)?.view()))
    }
}

impl ParamSet for LinearMotionEncoder {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        self.proj.push_refs("encoder.proj", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        self.proj.push_muts("encoder.proj", &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderTrainConfig {
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for EncoderTrainConfig {
    fn default() -> Self {
        Self { steps: 300, lr: 0.01, seed: 0 }
    }
}

/// Full-batch InfoNCE with logits `-|m_i - e_j|^2`. Returns the encoder and
/// the loss per step.
pub fn train_motion_encoder(
    motions: &[ArrayView2<'_, f64>],
    texts: ArrayView2<'_, f64>,
    config: &EncoderTrainConfig,
) -> Result<(LinearMotionEncoder, Vec<f64>)> {
    if motions.is_empty() || motions.len() != texts.nrows() {
        return Err(Error::EmptyDataset(format!("{} motions for {} texts", motions.len(), texts.nrows())));
    }
    let pooled: Vec<Array1<f64>> = motions.iter().map(|m| pooled_features(*m)).collect::<Result<_>>()?;
    let width = pooled[0].len();
    if pooled.iter().any(|p| p.len() != width) {
        return Err(Error::InvalidArgument("motions differ in pose width".into()));
    }
    let views: Vec<_> = pooled.iter().map(|p| p.view()).collect();
    let feats = ndarray::stack(Axis(0), &views).expect("equal widths");
    let center = feats.mean_axis(Axis(0)).expect("non-empty");
    let scale = feats.std_axis(Axis(0), 0.0).mapv(|s| s + SCALE_FLOOR);
    let x: Array2<f64> = (&feats - &center) / &scale;

    let mut rng = rng_stream(config.seed, 0x454e43);
    let mut enc = LinearMotionEncoder { center, scale, proj: Linear::init(width, texts.ncols(), &mut rng) };
    enc.proj.weight.mapv_inplace(|w| w * 0.1);
    let mut adam = AdamState::new(&enc);
    let n = x.nrows();
    let mut losses = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let m = enc.proj.forward(x.view());
        let mut logits = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let d = &m.row(i) - &texts.row(j);
                logits[[i, j]] = -d.dot(&d);
            }
        }
        let mut loss = 0.0;
        let mut dm = Array2::zeros(m.raw_dim());
        for i in 0..n {
            let row = logits.row(i);
            let mx = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let z: f64 = row.iter().map(|&l| (l - mx).exp()).sum();
            loss += -(row[i] - mx) + z.ln();
            let mut g = Array1::zeros(m.ncols());
            for j in 0..n {
                let p = (row[j] - mx).exp() / z;
                let coef = p - if i == j { 1.0 } else { 0.0 };
                // d logit_ij / d m_i = -2 (m_i - e_j)
                g.scaled_add(-2.0 * coef, &(&m.row(i) - &texts.row(j)));
            }
            dm.row_mut(i).assign(&(g / n as f64));
        }
        losses.push(loss / n as f64);
        let mut grads = enc.clone();
        grads.proj = enc.proj.zeros_like();
        enc.proj.backward(x.view(), dm.view(), &mut grads.proj);
        adam_step(&mut adam, &mut enc, &grads, config.lr)?;
    }
    Ok((enc, losses))
}
