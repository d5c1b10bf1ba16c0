//! Named access to learnable tensors, shared by optimizers, checkpoints and
//! gradient checks.

use super::linear::Linear;

pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub data: &'a mut [f64],
}

pub trait ParamSet {
    /// Tensors in a fixed order; the order is part of the checkpoint format.
    fn tensors(&self) -> Vec<TensorRef<'_>>;
    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Name of the first tensor holding a non-finite value.
    fn first_non_finite(&self) -> Option<String> {
        self.tensors()
            .into_iter()
            .find(|t| t.data.iter().any(|v| !v.is_finite()))
            .map(|t| t.name)
    }

    fn flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.data.iter().copied()).collect()
    }
}

impl Linear {
    pub fn push_refs<'a>(&'a self, prefix: &str, out: &mut Vec<TensorRef<'a>>) {
        out.push(TensorRef {
            name: format!("{prefix}.weight"),
            shape: self.weight.shape().to_vec(),
            data: self.weight.as_slice().expect("standard layout"),
        });
        out.push(TensorRef {
            name: format!("{prefix}.bias"),
            shape: self.bias.shape().to_vec(),
            data: self.bias.as_slice().expect("standard layout"),
        });
    }

    pub fn push_muts<'a>(&'a mut self, prefix: &str, out: &mut Vec<TensorMut<'a>>) {
        out.push(TensorMut {
            name: format!("{prefix}.weight"),
            data: self.weight.as_slice_mut().expect("standard layout"),
        });
        out.push(TensorMut {
            name: format!("{prefix}.bias"),
            data: self.bias.as_slice_mut().expect("standard layout"),
        });
    }
}

impl ParamSet for Linear {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        self.push_refs("linear", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        self.push_muts("linear", &mut out);
        out
    }
}
