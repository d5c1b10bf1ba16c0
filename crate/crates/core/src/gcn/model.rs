//! Learnable part graph network producing the spatial condition vector.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adjacency::AdjacencySubsets;
use super::graph::{node_features, NODE_FEATURE_DIM};
use super::ops::{
    aggregate_linear, normalize_rows, normalize_rows_backward, upper_triangle, upper_triangle_backward, Conv1d,
};
use crate::denoiser::{Linear, ParamSet, TensorMut, TensorRef};
use crate::error::{Error, Result};
use crate::motion::PoseLayout;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GcnConfig {
    pub num_joints: usize,
    pub num_subsets: usize,
    pub hidden: usize,
    pub gcn_layers: usize,
    pub conv_layers: usize,
    pub kernel: usize,
    pub stride: usize,
    /// Output width, equal to the denoiser's condition width.
    pub cond_dim: usize,
}

impl Default for GcnConfig {
    fn default() -> Self {
        Self { num_joints: 22, num_subsets: 6, hidden: 32, gcn_layers: 2, conv_layers: 2, kernel: 3, stride: 2, cond_dim: 64 }
    }
}

impl GcnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_joints < 2 || self.num_subsets == 0 || self.hidden == 0 || self.gcn_layers == 0 {
            return Err(Error::Config("graph network needs >= 2 joints, a subset, a layer and width".into()));
        }
        if self.kernel == 0 || self.stride == 0 || self.cond_dim == 0 {
            return Err(Error::Config("graph network kernel, stride and output width must be positive".into()));
        }
        Ok(())
    }

    pub fn num_pairs(&self) -> usize {
        self.num_joints * (self.num_joints - 1) / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub config: GcnConfig,
    /// `layers[l][k]` is `W_k` of layer `l`.
    pub layers: Vec<Vec<Array2<f64>>>,
    pub convs: Vec<Conv1d>,
    pub proj: Linear,
}

pub struct GcnCache {
    layer_inputs: Vec<Array3<f64>>,
    layer_pre: Vec<Array3<f64>>,
    conv_inputs: Vec<Array3<f64>>,
    conv_pre: Vec<Array3<f64>>,
    normed: Array2<f64>,
    norms: Vec<f64>,
    upper: Array1<f64>,
}

impl GcnCache {
    pub fn similarity(&self) -> Array2<f64> {
        self.normed.dot(&self.normed.t())
    }
}

impl GcnParams {
    fn build(config: &GcnConfig, mut mat: impl FnMut(usize, usize) -> Array2<f64>, mut conv: impl FnMut(usize) -> Conv1d, proj: Linear) -> Self {
        let c = config;
        let layers = (0..c.gcn_layers)
            .map(|l| {
                let input = if l == 0 { NODE_FEATURE_DIM } else { c.hidden };
                (0..c.num_subsets).map(|_| mat(input, c.hidden)).collect()
            })
            .collect();
        let convs = (0..c.conv_layers).map(|_| conv(c.hidden)).collect();
        Self { config: c.clone(), layers, convs, proj }
    }

    pub fn zeros(config: &GcnConfig) -> Result<Self> {
        config.validate()?;
        let c = config;
        Ok(Self::build(
            c,
            |i, o| Array2::zeros((i, o)),
            |h| Conv1d::zeros(c.kernel, h, h, c.stride),
            Linear::zeros(c.num_pairs(), c.cond_dim),
        ))
    }

    pub fn init<R: Rng + ?Sized>(config: &GcnConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let c = config;
        let rng = std::cell::RefCell::new(rng);
        let mats = |i: usize, o: usize| {
            let bound = 1.0 / (i as f64).sqrt();
            let mut r = rng.borrow_mut();
            Array2::from_shape_simple_fn((i, o), || r.gen_range(-bound..bound))
        };
        let convs = |h: usize| Conv1d::init(c.kernel, h, h, c.stride, &mut **rng.borrow_mut());
        let params = Self::build(c, mats, convs, Linear::zeros(1, 1));
        let proj = Linear::init(c.num_pairs(), c.cond_dim, &mut **rng.borrow_mut());
        Ok(Self { proj, ..params })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config).expect("validated")
    }

    fn check(&self, features: &ArrayView3<'_, f64>, adjacency: &AdjacencySubsets) -> Result<()> {
        let c = &self.config;
        let (t, n, f) = features.dim();
        if t == 0 || n != c.num_joints || f != NODE_FEATURE_DIM {
            return Err(Error::shape(
                "graph features",
                format!("[T>=1, {}, {NODE_FEATURE_DIM}]", c.num_joints),
                format!("[{t}, {n}, {f}]"),
            ));
        }
        if adjacency.len() != c.num_subsets || adjacency.num_nodes != n {
            return Err(Error::shape(
                "adjacency subsets",
                format!("{} over {n} joints", c.num_subsets),
                format!("{} over {} joints", adjacency.len(), adjacency.num_nodes),
            ));
        }
        if let Some(name) = self.first_non_finite() {
            return Err(Error::NonFinite(format!("graph parameter {name}")));
        }
        Ok(())
    }

    /// Features `T x N x 9` to the spatial condition vector.
    pub fn forward(&self, features: ArrayView3<'_, f64>, adjacency: &AdjacencySubsets) -> Result<(Array1<f64>, GcnCache)> {
        self.check(&features, adjacency)?;
        let adj = adjacency.matrices();
        let (t_len, n, _) = features.dim();
        let mut h = features.to_owned();
        let mut layer_inputs = Vec::new();
        let mut layer_pre = Vec::new();
        for weights in &self.layers {
            let mut z = Array3::zeros((t_len, n, self.config.hidden));
            for t in 0..t_len {
                let zt = aggregate_linear(h.index_axis(Axis(0), t), &adj, weights)?;
                z.index_axis_mut(Axis(0), t).assign(&zt);
            }
            layer_inputs.push(h);
            h = z.mapv(|v| v.max(0.0));
            layer_pre.push(z);
        }
        let mut conv_inputs = Vec::new();
        let mut conv_pre = Vec::new();
        for (i, conv) in self.convs.iter().enumerate() {
            let z = conv.forward(h.view());
            conv_inputs.push(h);
            h = if i + 1 < self.convs.len() { z.mapv(|v| v.max(0.0)) } else { z.clone() };
            conv_pre.push(z);
        }
        let pooled = h.mean_axis(Axis(0)).expect("at least one frame");
        let (normed, norms) = normalize_rows(pooled.view());
        let s = normed.dot(&normed.t());
        let upper = upper_triangle(s.view());
        let out = self.proj.forward_vec(upper.view());
        Ok((out, GcnCache { layer_inputs, layer_pre, conv_inputs, conv_pre, normed, norms, upper }))
    }

    /// Parameter gradients given `dL/d output`.
    pub fn backward(&self, adjacency: &AdjacencySubsets, cache: &GcnCache, d_out: ArrayView1<'_, f64>) -> Result<GcnParams> {
        if d_out.len() != self.config.cond_dim {
            return Err(Error::shape("spatial gradient", self.config.cond_dim, d_out.len()));
        }
        let mut g = self.zeros_like();
        let n = self.config.num_joints;
        let d_upper = self.proj.backward_vec(cache.upper.view(), d_out, &mut g.proj);
        let ds = upper_triangle_backward(n, d_upper.view());
        let d_normed = (&ds + &ds.t()).dot(&cache.normed);
        let d_pooled = normalize_rows_backward(&cache.normed, &cache.norms, d_normed.view());

        let last_len = cache.conv_pre.last().map_or_else(|| cache.layer_pre.last().unwrap().dim().0, |z| z.dim().0);
        let mut dh = Array3::zeros((last_len, n, self.config.hidden));
        for mut frame in dh.outer_iter_mut() {
            frame.assign(&(&d_pooled / last_len as f64));
        }
        for (i, conv) in self.convs.iter().enumerate().rev() {
            if i + 1 < self.convs.len() {
                relu_mask(&cache.conv_pre[i], &mut dh);
            }
            dh = conv.backward(cache.conv_inputs[i].view(), dh.view(), &mut g.convs[i]);
        }

        let adj = adjacency.matrices();
        for (l, weights) in self.layers.iter().enumerate().rev() {
            relu_mask(&cache.layer_pre[l], &mut dh);
            let input = &cache.layer_inputs[l];
            let mut d_in = Array3::zeros(input.raw_dim());
            for t in 0..input.dim().0 {
                let f = input.index_axis(Axis(0), t);
                let dz = dh.index_axis(Axis(0), t);
                let mut dft = d_in.index_axis_mut(Axis(0), t);
                for (k, w) in weights.iter().enumerate() {
                    let a_dz = adj[k].t().dot(&dz);
                    g.layers[l][k] += &f.t().dot(&a_dz);
                    if l > 0 {
                        dft += &a_dz.dot(&w.t());
                    }
                }
            }
            dh = d_in;
        }
        Ok(g)
    }

    /// Spatial condition for a pose sequence; callers pass the masked
    /// interactive motion.
    pub fn spatial_condition(
        &self,
        frames: ArrayView2<'_, f64>,
        layout: &PoseLayout,
        adjacency: &AdjacencySubsets,
    ) -> Result<(Array1<f64>, GcnCache)> {
        let features = node_features(frames, layout)?;
        self.forward(features.view(), adjacency)
    }
}

fn relu_mask(pre: &Array3<f64>, grad: &mut Array3<f64>) {
    ndarray::Zip::from(grad).and(pre).for_each(|g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
}

impl ParamSet for GcnParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = Vec::new();
        for (l, ws) in self.layers.iter().enumerate() {
            for (k, w) in ws.iter().enumerate() {
                out.push(TensorRef {
                    name: format!("gcn.layers.{l}.subset.{k}"),
                    shape: w.shape().to_vec(),
                    data: w.as_slice().expect("standard layout"),
                });
            }
        }
        for (i, c) in self.convs.iter().enumerate() {
            out.push(TensorRef {
                name: format!("gcn.convs.{i}.weight"),
                shape: c.weight.shape().to_vec(),
                data: c.weight.as_slice().expect("standard layout"),
            });
            out.push(TensorRef {
                name: format!("gcn.convs.{i}.bias"),
                shape: c.bias.shape().to_vec(),
                data: c.bias.as_slice().expect("standard layout"),
            });
        }
        self.proj.push_refs("gcn.proj", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        for (l, ws) in self.layers.iter_mut().enumerate() {
            for (k, w) in ws.iter_mut().enumerate() {
                out.push(TensorMut { name: format!("gcn.layers.{l}.subset.{k}"), data: w.as_slice_mut().expect("standard layout") });
            }
        }
        for (i, c) in self.convs.iter_mut().enumerate() {
            out.push(TensorMut { name: format!("gcn.convs.{i}.weight"), data: c.weight.as_slice_mut().expect("standard layout") });
            out.push(TensorMut { name: format!("gcn.convs.{i}.bias"), data: c.bias.as_slice_mut().expect("standard layout") });
        }
        self.proj.push_muts("gcn.proj", &mut out);
        out
    }
}
