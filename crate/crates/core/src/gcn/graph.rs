//! Spatio-temporal motion graph and per-node features.

use ndarray::{Array3, ArrayView2};

use crate::error::{Error, Result};
use crate::motion::{MotionSequence, PoseLayout, Skeleton};

/// Per node: 6D rotation followed by 3D position.
pub const NODE_FEATURE_DIM: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionGraph {
    pub num_frames: usize,
    pub num_joints: usize,
    /// `T x N x 9`; the root row is zero.
    pub features: Array3<f64>,
    /// Undirected edges over node ids `t * N + i`.
    pub edges: Vec<(usize, usize)>,
}

impl MotionGraph {
    pub fn num_nodes(&self) -> usize {
        self.num_frames * self.num_joints
    }

    pub fn node(&self, frame: usize, joint: usize) -> usize {
        frame * self.num_joints + joint
    }

    pub fn anatomical_edge_count(&self) -> usize {
        self.num_frames * self.num_joints.saturating_sub(1)
    }

    pub fn temporal_edge_count(&self) -> usize {
        self.num_joints * self.num_frames.saturating_sub(1)
    }
}

/// Gathers `[rot6 | pos3]` for every joint of every frame.
pub fn node_features(frames: ArrayView2<'_, f64>, layout: &PoseLayout) -> Result<Array3<f64>> {
    let (t, d) = frames.dim();
    if d != layout.total_dim() {
        return Err(Error::shape("pose rows", format!("[*, {}]", layout.total_dim()), format!("[{t}, {d}]")));
    }
    let n = layout.num_joints();
    let mut out = Array3::zeros((t, n, NODE_FEATURE_DIM));
    for j in 1..n {
        let rot = layout.rotation_dims(j).expect("non-root joint");
        let pos = layout.position_dims(j).expect("non-root joint");
        for f in 0..t {
            for (k, dim) in rot.clone().chain(pos.clone()).enumerate() {
                out[[f, j, k]] = frames[[f, dim]];
            }
        }
    }
    Ok(out)
}

pub fn build_graph(x: &MotionSequence, skeleton: &Skeleton) -> Result<MotionGraph> {
    let layout = x.layout();
    if layout.num_joints() != skeleton.num_joints() {
        return Err(Error::shape(
            "layout vs skeleton joints",
            skeleton.num_joints(),
            layout.num_joints(),
        ));
    }
    let features = node_features(x.frames().view(), layout)?;
    let (t_len, n) = (x.num_frames(), skeleton.num_joints());
    let mut edges = Vec::with_capacity(t_len * (n - 1) + n * t_len.saturating_sub(1));
    for t in 0..t_len {
        for (p, c) in skeleton.edges() {
            edges.push((t * n + p, t * n + c));
        }
    }
    for t in 0..t_len.saturating_sub(1) {
        for i in 0..n {
            edges.push((t * n + i, (t + 1) * n + i));
        }
    }
    Ok(MotionGraph { num_frames: t_len, num_joints: n, features, edges })
}
