//! Motion sequences and their on-disk JSON container.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::layout::{PoseLayout, DIM_ORDER_TAG};
use crate::error::{Error, Result};

pub const MOTION_FORMAT: &str = "partmotion-motion";
pub const MOTION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    frames: Array2<f64>,
    layout: PoseLayout,
    fps: f64,
}

impl MotionSequence {
    pub fn new(frames: Array2<f64>, layout: PoseLayout, fps: f64) -> Result<Self> {
        if frames.ncols() != layout.total_dim() {
            return Err(Error::shape("motion row width", layout.total_dim(), frames.ncols()));
        }
        if frames.nrows() == 0 {
            return Err(Error::InvalidArgument("a motion needs at least one frame".into()));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { frames, layout, fps })
    }

    pub fn frames(&self) -> &Array2<f64> {
        &self.frames
    }

    pub fn into_frames(self) -> Array2<f64> {
        self.frames
    }

    pub fn layout(&self) -> &PoseLayout {
        &self.layout
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn to_json(&self) -> String {
        let file = MotionFile {
            format: MOTION_FORMAT.to_string(),
            version: MOTION_FORMAT_VERSION,
            num_joints: self.layout.num_joints(),
            contact_joints: self.layout.contact_joints().to_vec(),
            fps: self.fps,
            dim_order: DIM_ORDER_TAG.to_string(),
            num_frames: self.frames.nrows(),
            dim: self.frames.ncols(),
            frames: self.frames.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        serde_json::to_string(&file).expect("motion serializes")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let file: MotionFile = serde_json::from_str(text).map_err(|e| Error::data(origin, e))?;
        if file.format != MOTION_FORMAT {
            return Err(Error::data(origin, format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != MOTION_FORMAT_VERSION {
            return Err(Error::data(origin, format!("unsupported version {}", file.version)));
        }
        if file.dim_order != DIM_ORDER_TAG {
            return Err(Error::data(origin, format!("unsupported dimension order {:?}", file.dim_order)));
        }
        let layout = PoseLayout::new(file.num_joints, &file.contact_joints).map_err(|e| Error::data(origin, e))?;
        if file.dim != layout.total_dim() || file.frames.len() != file.num_frames {
            return Err(Error::data(origin, "header does not match frame matrix"));
        }
        let mut frames = Array2::zeros((file.num_frames, file.dim));
        for (i, row) in file.frames.iter().enumerate() {
            if row.len() != file.dim {
                return Err(Error::data(origin, format!("frame {i} has {} values", row.len())));
            }
            frames.row_mut(i).assign(&ndarray::ArrayView1::from(row.as_slice()));
        }
        MotionSequence::new(frames, layout, file.fps).map_err(|e| Error::data(origin, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

/// Serialized form. Field names are part of the file format.
#[derive(Debug, Serialize, Deserialize)]
struct MotionFile {
    format: String,
    version: u32,
    num_joints: usize,
    contact_joints: Vec<usize>,
    fps: f64,
    dim_order: String,
    num_frames: usize,
    dim: usize,
    frames: Vec<Vec<f64>>,
}
