//! Graph aggregation, temporal compression and the similarity feature.

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};
use rand::Rng;

use crate::denoiser::Linear;
use crate::error::{Error, Result};

/// `relu(sum_k A_k F W_k)` for one frame.
pub fn aggregate(f: ArrayView2<'_, f64>, adjacency: &[&Array2<f64>], weights: &[Array2<f64>]) -> Result<Array2<f64>> {
    let mut z = aggregate_linear(f, adjacency, weights)?;
    z.mapv_inplace(|v| v.max(0.0));
    Ok(z)
}

pub(crate) fn aggregate_linear(
    f: ArrayView2<'_, f64>,
    adjacency: &[&Array2<f64>],
    weights: &[Array2<f64>],
) -> Result<Array2<f64>> {
    if adjacency.len() != weights.len() || weights.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} adjacency subsets but {} weight matrices",
            adjacency.len(),
            weights.len()
        )));
    }
    let (n, width) = f.dim();
    let out = weights[0].ncols();
    let mut z = Array2::zeros((n, out));
    for (a, w) in adjacency.iter().zip(weights) {
        if a.dim() != (n, n) {
            return Err(Error::shape("adjacency", format!("[{n}, {n}]"), format!("{:?}", a.shape())));
        }
        if w.dim() != (width, out) {
            return Err(Error::shape("subset weights", format!("[{width}, {out}]"), format!("{:?}", w.shape())));
        }
        z += &a.dot(&f.dot(w));
    }
    Ok(z)
}

/// Temporal convolution shared across joints. Frames past the end are
/// replicated from the last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// `kernel x in x out`.
    pub weight: Array3<f64>,
    pub bias: Array1<f64>,
    pub stride: usize,
}

impl Conv1d {
    pub fn zeros(kernel: usize, input: usize, output: usize, stride: usize) -> Self {
        Self { weight: Array3::zeros((kernel, input, output)), bias: Array1::zeros(output), stride }
    }

    pub fn init<R: Rng + ?Sized>(kernel: usize, input: usize, output: usize, stride: usize, rng: &mut R) -> Self {
        let bound = 1.0 / ((kernel * input).max(1) as f64).sqrt();
        Self {
            weight: Array3::from_shape_simple_fn((kernel, input, output), || rng.gen_range(-bound..bound)),
            bias: Array1::from_shape_simple_fn(output, || rng.gen_range(-bound..bound)),
            stride,
        }
    }

    pub fn kernel(&self) -> usize {
        self.weight.dim().0
    }

    pub fn output_len(&self, len: usize) -> usize {
        len.div_ceil(self.stride)
    }

    fn source(&self, o: usize, k: usize, len: usize) -> usize {
        (o * self.stride + k).min(len - 1)
    }

    /// `x` is `T x N x in`; returns `ceil(T / stride) x N x out`.
    pub fn forward(&self, x: ArrayView3<'_, f64>) -> Array3<f64> {
        let (len, n, _) = x.dim();
        let lo = self.output_len(len);
        let mut y = Array3::zeros((lo, n, self.bias.len()));
        for o in 0..lo {
            let mut yo = y.index_axis_mut(Axis(0), o);
            yo += &self.bias;
            for k in 0..self.kernel() {
                let src = x.index_axis(Axis(0), self.source(o, k, len));
                yo += &src.dot(&self.weight.index_axis(Axis(0), k));
            }
        }
        y
    }

    pub fn backward(&self, x: ArrayView3<'_, f64>, dy: ArrayView3<'_, f64>, grad: &mut Conv1d) -> Array3<f64> {
        let len = x.dim().0;
        let mut dx = Array3::zeros(x.raw_dim());
        for o in 0..dy.dim().0 {
            let dyo = dy.index_axis(Axis(0), o);
            grad.bias += &dyo.sum_axis(Axis(0));
            for k in 0..self.kernel() {
                let src = self.source(o, k, len);
                let mut gw = grad.weight.index_axis_mut(Axis(0), k);
                gw += &x.index_axis(Axis(0), src).t().dot(&dyo);
                let mut dxs = dx.index_axis_mut(Axis(0), src);
                dxs += &dyo.dot(&self.weight.index_axis(Axis(0), k).t());
            }
        }
        dx
    }
}

/// Convolution stack (ReLU between layers, none after the last) followed by
/// mean pooling over the remaining frames. Returns one row per joint.
pub fn temporal_compress(x: ArrayView3<'_, f64>, convs: &[Conv1d]) -> Result<Array2<f64>> {
    if x.dim().0 == 0 {
        return Err(Error::InvalidArgument("temporal compression needs at least one frame".into()));
    }
    let mut h = x.to_owned();
    for (i, conv) in convs.iter().enumerate() {
        h = conv.forward(h.view());
        if i + 1 < convs.len() {
            h.mapv_inplace(|v| v.max(0.0));
        }
    }
    Ok(h.mean_axis(Axis(0)).expect("non-empty"))
}

/// Cosine similarity between rows; zero rows give zero rows and columns.
pub fn similarity(f: ArrayView2<'_, f64>) -> Array2<f64> {
    let normed = normalize_rows(f).0;
    normed.dot(&normed.t())
}

pub(crate) fn normalize_rows(f: ArrayView2<'_, f64>) -> (Array2<f64>, Vec<f64>) {
    let mut out = f.to_owned();
    let mut norms = Vec::with_capacity(f.nrows());
    for mut row in out.rows_mut() {
        let n = row.dot(&row).sqrt();
        if n > 0.0 {
            row /= n;
        }
        norms.push(n);
    }
    (out, norms)
}

/// Strict upper triangle in row-major order.
pub fn upper_triangle(s: ArrayView2<'_, f64>) -> Array1<f64> {
    let n = s.nrows();
    let mut v = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            v.push(s[[i, j]]);
        }
    }
    Array1::from(v)
}

pub fn spatial_feature_vector(s: ArrayView2<'_, f64>, proj: &Linear) -> Result<Array1<f64>> {
    let (r, c) = s.dim();
    if r != c {
        return Err(Error::shape("similarity matrix", "square", format!("[{r}, {c}]")));
    }
    let u = upper_triangle(s);
    if u.len() != proj.input_dim() {
        return Err(Error::shape("similarity upper triangle", proj.input_dim(), u.len()));
    }
    Ok(proj.forward_vec(u.view()))
}

/// Gradient of row normalization given `dL/d normalized`.
pub(crate) fn normalize_rows_backward(normed: &Array2<f64>, norms: &[f64], d_normed: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut d = Array2::zeros(normed.raw_dim());
    for (i, &n) in norms.iter().enumerate() {
        if n > 0.0 {
            let u = normed.row(i);
            let g = d_normed.row(i);
            let proj = u.dot(&g);
            d.slice_mut(s![i, ..]).assign(&((&g - &(&u * proj)) / n));
        }
    }
    d
}

pub(crate) fn upper_triangle_backward(n: usize, d_upper: ArrayView1<'_, f64>) -> Array2<f64> {
    let mut d = Array2::zeros((n, n));
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            d[[i, j]] = d_upper[k];
            k += 1;
        }
    }
    d
}
