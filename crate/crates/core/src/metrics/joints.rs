//! Decoding pose rows into world-space joint positions.

use ndarray::{Array3, ArrayView3};

use crate::error::{Error, Result};
use crate::motion::{root_trajectory, MotionSequence};

/// `T x N x 3` joint positions.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPositions {
    pub positions: Array3<f64>,
}

impl JointPositions {
    pub fn new(positions: Array3<f64>) -> Result<Self> {
        if positions.dim().2 != 3 {
            return Err(Error::shape("joint positions", "[T, N, 3]", format!("{:?}", positions.shape())));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("joint positions".into()));
        }
        Ok(Self { positions })
    }

    pub fn num_frames(&self) -> usize {
        self.positions.dim().0
    }

    pub fn num_joints(&self) -> usize {
        self.positions.dim().1
    }

    pub fn view(&self) -> ArrayView3<'_, f64> {
        self.positions.view()
    }
}

/// Root from [`root_trajectory`]; other joints add their root-relative
/// triplet to the root position.
pub fn to_joint_positions(x: &MotionSequence) -> Result<JointPositions> {
    let layout = x.layout();
    let frames = x.frames();
    let (t_len, n) = (x.num_frames(), layout.num_joints());
    let root = root_trajectory(frames.view(), layout);
    let mut out = Array3::zeros((t_len, n, 3));
    for t in 0..t_len {
        for a in 0..3 {
            out[[t, 0, a]] = root[t][a];
        }
        for j in 1..n {
            let dims = layout.position_dims(j).expect("non-root joint");
            for (a, d) in dims.enumerate() {
                out[[t, j, a]] = root[t][a] + frames[[t, d]];
            }
        }
    }
    JointPositions::new(out)
}
