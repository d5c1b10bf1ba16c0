//! Variance schedules, forward noising, x0-parameterized reverse steps,
//! classifier-free guidance and the masked overwrite used between stages.
//!
//! Steps are 1-based: `t` runs from 1 (nearly clean) to `steps()` (nearly
//! pure noise), and `alpha_bar(0)` is defined as 1.

use ndarray::{Array, Array2, ArrayView2, Dimension, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::PartMask;

/// Deterministic random stream; equal `(seed, stream)` pairs give equal draws.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal<D: Dimension, R: Rng + ?Sized>(shape: D, rng: &mut R) -> Array<f64, D> {
    Array::from_shape_simple_fn(shape, || rng.sample::<f64, _>(StandardNormal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl DiffusionSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidArgument("a schedule needs at least one step".into()));
        }
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::InvalidArgument(format!("beta {b} outside (0, 1)")));
        }
        Ok(Self::from_betas_unchecked(betas))
    }

    /// Skips the `0 < beta < 1` check so limit cases (beta = 0) can be probed.
    pub(crate) fn from_betas_unchecked(betas: Vec<f64>) -> Self {
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Self {
            betas,
            alphas,
            alpha_bars,
        }
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn check(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.steps() {
            return Err(Error::StepOutOfRange {
                step: t,
                max: self.steps(),
            });
        }
        Ok(t - 1)
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}

/// Linearly spaced betas from `beta_start` to `beta_end`.
pub fn make_schedule(
    steps: usize,
    beta_start: f64,
    beta_end: f64,
    kind: ScheduleKind,
) -> Result<DiffusionSchedule> {
    if steps == 0 {
        return Err(Error::InvalidArgument("t-steps must be at least 1".into()));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < beta-start <= beta-end < 1, got {beta_start}..{beta_end}"
        )));
    }
    let betas = match kind {
        ScheduleKind::Linear => (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    };
    DiffusionSchedule::from_betas(betas)
}

/// Closed-form `q(x_t | x_0)`: `sqrt(abar) x0 + sqrt(1 - abar) eps`.
pub fn forward_sample<D: Dimension, R: Rng + ?Sized>(
    x0: &Array<f64, D>,
    t: usize,
    schedule: &DiffusionSchedule,
    rng: &mut R,
) -> Result<Array<f64, D>> {
    schedule.check(t)?;
    let noise = standard_normal(x0.raw_dim(), rng);
    Ok(forward_with_noise(x0, t, schedule, &noise))
}

/// Forward noising with caller-supplied standard-normal noise.
pub fn forward_with_noise<D: Dimension>(
    x0: &Array<f64, D>,
    t: usize,
    schedule: &DiffusionSchedule,
    noise: &Array<f64, D>,
) -> Array<f64, D> {
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    let mut out = x0.clone();
    Zip::from(&mut out).and(noise).for_each(|x, &e| *x = a * *x + b * e);
    out
}

/// Which algebraic form of the reverse mean to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanForm {
    /// Predicted noise recovered from x0 before the usual epsilon-form mean;
    /// equal to the Gaussian posterior mean of `q(x_{t-1} | x_t, x_0)`.
    #[default]
    Standard,
    /// Applies `beta_t / sqrt(1 - abar_t)` directly to `x_t - sqrt(abar_t) x0`,
    /// without the extra `1 / sqrt(1 - abar_t)`. Kept for comparison only.
    Printed,
}

pub fn posterior_mean<D: Dimension>(
    x_t: &Array<f64, D>,
    x0_hat: &Array<f64, D>,
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<Array<f64, D>> {
    posterior_mean_with(x_t, x0_hat, t, schedule, MeanForm::Standard)
}

pub fn posterior_mean_with<D: Dimension>(
    x_t: &Array<f64, D>,
    x0_hat: &Array<f64, D>,
    t: usize,
    schedule: &DiffusionSchedule,
    form: MeanForm,
) -> Result<Array<f64, D>> {
    schedule.check(t)?;
    if x_t.shape() != x0_hat.shape() {
        return Err(Error::shape(
            "posterior_mean",
            format!("{:?}", x_t.shape()),
            format!("{:?}", x0_hat.shape()),
        ));
    }
    let (alpha, beta, ab) = (schedule.alpha(t), schedule.beta(t), schedule.alpha_bar(t));
    let inv_sqrt_alpha = 1.0 / alpha.sqrt();
    let sqrt_ab = ab.sqrt();
    let sigma = (1.0 - ab).sqrt();
    let mut out = x_t.clone();
    Zip::from(&mut out).and(x0_hat).for_each(|x, &x0| {
        let residual = *x - sqrt_ab * x0;
        let correction = if sigma == 0.0 {
            0.0
        } else {
            match form {
                MeanForm::Standard => beta / sigma * (residual / sigma),
                MeanForm::Printed => beta / sigma * residual,
            }
        };
        *x = inv_sqrt_alpha * (*x - correction);
    });
    Ok(out)
}

/// One ancestral step. Adds `sqrt(beta_t) z` noise when `stochastic` and `t > 1`.
pub fn reverse_step<D: Dimension, R: Rng + ?Sized>(
    x_t: &Array<f64, D>,
    x0_hat: &Array<f64, D>,
    t: usize,
    schedule: &DiffusionSchedule,
    rng: &mut R,
    stochastic: bool,
) -> Result<Array<f64, D>> {
    let mut mean = posterior_mean(x_t, x0_hat, t, schedule)?;
    if stochastic && t > 1 {
        let sd = schedule.beta(t).sqrt();
        mean.mapv_inplace(|m| m + sd * rng.sample::<f64, _>(StandardNormal));
    }
    Ok(mean)
}

/// `uncond + scale * (cond - uncond)`.
pub fn cfg_combine<D: Dimension>(
    x0_uncond: &Array<f64, D>,
    x0_cond: &Array<f64, D>,
    scale: f64,
) -> Result<Array<f64, D>> {
    if x0_uncond.shape() != x0_cond.shape() {
        return Err(Error::shape(
            "cfg_combine",
            format!("{:?}", x0_uncond.shape()),
            format!("{:?}", x0_cond.shape()),
        ));
    }
    let mut out = x0_uncond.clone();
    Zip::from(&mut out)
        .and(x0_cond)
        .for_each(|u, &c| *u += scale * (c - *u));
    Ok(out)
}

/// `m * x_inter + (1 - m) * x0_hat`, as a select so masked entries are exact copies.
pub fn compose_overwrite(
    x0_hat: ArrayView2<'_, f64>,
    x_inter: ArrayView2<'_, f64>,
    mask: &PartMask,
) -> Result<Array2<f64>> {
    if x0_hat.dim() != x_inter.dim() {
        return Err(Error::shape(
            "compose_overwrite",
            format!("{:?}", x0_hat.dim()),
            format!("{:?}", x_inter.dim()),
        ));
    }
    if x0_hat.ncols() != mask.len() {
        return Err(Error::shape("compose_overwrite mask", x0_hat.ncols(), mask.len()));
    }
    let mut out = x0_hat.to_owned();
    for (d, &bit) in mask.bits().iter().enumerate() {
        if bit {
            out.column_mut(d).assign(&x_inter.column(d));
        }
    }
    Ok(out)
}

/// Ancestral sampling from `x_T ~ N(0, I)` down to `x_0`.
///
/// `predict` receives `(x_t, t)` and returns the (already guided / composed)
/// clean-sample estimate.
pub fn sample_loop<R, F>(
    shape: (usize, usize),
    schedule: &DiffusionSchedule,
    rng: &mut R,
    stochastic: bool,
    mut predict: F,
) -> Result<Array2<f64>>
where
    R: Rng + ?Sized,
    F: FnMut(&Array2<f64>, usize) -> Result<Array2<f64>>,
{
    let mut x = standard_normal(ndarray::Ix2(shape.0, shape.1), rng);
    for t in (1..=schedule.steps()).rev() {
        let x0_hat = predict(&x, t)?;
        x = reverse_step(&x, &x0_hat, t, schedule, rng, stochastic)?;
    }
    Ok(x)
}
