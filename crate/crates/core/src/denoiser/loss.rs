//! Reconstruction objectives with gradients.

use ndarray::{s, Array1, Array2, Zip};

use super::model::{ConditionBundle, DenoiserInput, DenoiserParams};
use crate::diffusion::compose_overwrite;
use crate::error::{Error, Result};
use crate::motion::PartMask;

/// One training item: clean motion, its noised version at step `t`, and the
/// conditions.
#[derive(Debug, Clone)]
pub struct DenoiseExample {
    pub x0: Array2<f64>,
    pub x_t: Array2<f64>,
    pub t: usize,
    pub conds: ConditionBundle,
    /// Optional per-dim weights for the stage-1 loss.
    pub weights: Option<Array1<f64>>,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: DenoiserParams,
    /// Per-example gradient with respect to the spatial condition.
    pub d_spatial: Vec<Option<Array1<f64>>>,
    /// Gradient with respect to the stacked network output.
    pub d_output: Array2<f64>,
}

fn inputs(batch: &[DenoiseExample]) -> Result<Vec<DenoiserInput<'_>>> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset("loss over an empty batch".into()));
    }
    batch
        .iter()
        .map(|e| {
            if e.x0.dim() != e.x_t.dim() {
                return Err(Error::shape("x0 vs x_t", format!("{:?}", e.x_t.shape()), format!("{:?}", e.x0.shape())));
            }
            Ok(DenoiserInput { x_t: e.x_t.view(), t: e.t, conds: &e.conds })
        })
        .collect()
}

/// Weighted mean squared error `sum w (x̂0 - x0)^2 / sum w`; unweighted
/// examples count every dim once.
pub fn stage1_loss(params: &DenoiserParams, batch: &[DenoiseExample]) -> Result<LossOutput> {
    let ins = inputs(batch)?;
    let (out, cache) = params.forward_batch(&ins)?;
    let d = params.config.pose_dim;
    let mut w = Array2::<f64>::ones(out.dim());
    for (i, e) in batch.iter().enumerate() {
        if let Some(weights) = &e.weights {
            if weights.len() != d {
                return Err(Error::shape("loss weights", format!("[{d}]"), format!("[{}]", weights.len())));
            }
            w.slice_mut(s![cache.sample_rows(i), ..]).assign(weights);
        }
    }
    let total: f64 = w.sum();
    let mut d_out = Array2::zeros(out.dim());
    let mut loss = 0.0;
    if total > 0.0 {
        for (i, e) in batch.iter().enumerate() {
            let rows = cache.sample_rows(i);
            let diff = &out.slice(s![rows.clone(), ..]) - &e.x0;
            let wi = w.slice(s![rows.clone(), ..]);
            loss += (&diff * &diff * wi).sum() / total;
            d_out.slice_mut(s![rows, ..]).assign(&(&diff * &wi * (2.0 / total)));
        }
    }
    let (grads, d_spatial) = params.backward_batch(&ins, &cache, d_out.view())?;
    Ok(LossOutput { loss, grads, d_spatial, d_output: d_out })
}

/// Mean squared error of `compose_overwrite(x̂0, x_inter, m)` against `x0`
/// over all elements. Output entries on mask dims receive exactly zero
/// gradient.
pub fn stage2_loss(
    params: &DenoiserParams,
    batch: &[DenoiseExample],
    x_inter: &[Array2<f64>],
    masks: &[PartMask],
) -> Result<LossOutput> {
    if x_inter.len() != batch.len() || masks.len() != batch.len() {
        return Err(Error::InvalidArgument(format!(
            "batch of {} examples with {} interactive motions and {} masks",
            batch.len(),
            x_inter.len(),
            masks.len()
        )));
    }
    let ins = inputs(batch)?;
    let (out, cache) = params.forward_batch(&ins)?;
    let total = out.len() as f64;
    let mut d_out = Array2::zeros(out.dim());
    let mut loss = 0.0;
    for (i, e) in batch.iter().enumerate() {
        let rows = cache.sample_rows(i);
        let composed = compose_overwrite(out.slice(s![rows.clone(), ..]), x_inter[i].view(), &masks[i])?;
        let diff = composed - &e.x0;
        loss += diff.iter().map(|v| v * v).sum::<f64>() / total;
        let mut g = d_out.slice_mut(s![rows, ..]);
        Zip::indexed(&mut g).and(&diff).for_each(|(_, j), gv, &dv| {
            *gv = if masks[i].is_set(j) { 0.0 } else { 2.0 * dv / total };
        });
    }
    let (grads, d_spatial) = params.backward_batch(&ins, &cache, d_out.view())?;
    Ok(LossOutput { loss, grads, d_spatial, d_output: d_out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::model::DenoiserConfig;
    use crate::denoiser::params::ParamSet;
    use crate::diffusion::rng_stream;
    use ndarray::array;

    fn cfg() -> DenoiserConfig {
        DenoiserConfig { pose_dim: 3, width: 4, depth: 1, embed_dim: 4, text_dim: 2, cond_dim: 2, steps: 5, spatial: false }
    }

    fn example(x0: Array2<f64>) -> DenoiseExample {
        let conds = ConditionBundle::new(array![1.0, 0.0], array![1.0, 0.0, 0.0], array![0.0, 1.0]);
        DenoiseExample { x_t: x0.clone(), x0, t: 2, conds, weights: None }
    }

    #[test]
    fn exact_and_unit_offset() {
        let p = DenoiserParams::zeros(&cfg()).unwrap();
        let zero = stage1_loss(&p, &[example(Array2::zeros((2, 3)))]).unwrap();
        assert_eq!(zero.loss, 0.0);
        let off = stage1_loss(&p, &[example(Array2::from_elem((2, 3), -1.0))]).unwrap();
        assert!((off.loss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stage2_reduces_and_saturates() {
        let p = DenoiserParams::init(&cfg(), &mut rng_stream(3, 0)).unwrap();
        let batch = [example(array![[0.1, 0.2, 0.3], [0.4, -0.5, 0.6]])];
        let x_inter = [array![[9.0, 9.0, 9.0], [9.0, 9.0, 9.0]]];
        let s1 = stage1_loss(&p, &batch).unwrap();
        let none = PartMask::from_bits(vec![false; 3]);
        let s2 = stage2_loss(&p, &batch, &x_inter, &[none]).unwrap();
        assert!((s1.loss - s2.loss).abs() < 1e-12);
        for (a, b) in s1.grads.flat().iter().zip(s2.grads.flat()) {
            assert!((a - b).abs() < 1e-12);
        }

        let all = PartMask::from_bits(vec![true; 3]);
        let s2 = stage2_loss(&p, &batch, &x_inter, &[all]).unwrap();
        assert!(s2.grads.flat().iter().all(|&g| g == 0.0));
    }
}
