//! Gradient-descent updates over any [`ParamSet`].

use super::params::ParamSet;
use crate::error::{Error, Result};

fn check_grads<P: ParamSet>(params: &P, grads: &P) -> Result<()> {
    let (p, g) = (params.tensors(), grads.tensors());
    if p.len() != g.len() || p.iter().zip(&g).any(|(a, b)| a.data.len() != b.data.len()) {
        return Err(Error::InvalidArgument("gradient layout does not match parameters".into()));
    }
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::NonFinite(format!("gradient of {name}; step rejected")));
    }
    Ok(())
}

/// `w <- w - lr g`.
pub fn sgd_step<P: ParamSet>(params: &mut P, grads: &P, lr: f64) -> Result<()> {
    check_grads(params, grads)?;
    for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        for (w, d) in p.data.iter_mut().zip(g.data) {
            *w -= lr * d;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros.clone(), v: zeros }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

/// Bias-corrected Adam update. A rejected step leaves both the parameters and
/// the optimizer state untouched.
pub fn adam_step<P: ParamSet>(state: &mut AdamState, params: &mut P, grads: &P, lr: f64) -> Result<()> {
    check_grads(params, grads)?;
    if state.m.len() != grads.tensors().len() {
        return Err(Error::InvalidArgument("optimizer state does not match parameters".into()));
    }
    state.step += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step as i32);
    for (k, (p, g)) in params.tensors_mut().into_iter().zip(grads.tensors()).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..p.data.len() {
            let d = g.data[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * d;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * d * d;
            let mh = m[i] / bc1;
            let vh = v[i] / bc2;
            p.data[i] -= lr * mh / (vh.sqrt() + state.eps);
        }
    }
    Ok(())
}
