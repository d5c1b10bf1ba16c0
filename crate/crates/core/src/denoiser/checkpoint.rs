//! Self-describing JSON container: a config header followed by named tensors
//! in a fixed order. Equal parameters always encode to equal bytes.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "partmotion-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format: String,
    pub version: u32,
    pub kind: String,
    pub config: serde_json::Value,
    pub tensors: Vec<StoredTensor>,
}

impl CheckpointFile {
    pub fn capture<C: Serialize, P: ParamSet>(kind: &str, config: &C, params: &P) -> Result<Self> {
        if let Some(name) = params.first_non_finite() {
            return Err(Error::NonFinite(format!("refusing to store non-finite tensor {name}")));
        }
        let config = serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?;
        let tensors = params
            .tensors()
            .into_iter()
            .map(|t| StoredTensor { name: t.name, shape: t.shape, data: t.data.to_vec() })
            .collect();
        Ok(Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            kind: kind.into(),
            config,
            tensors,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::data(origin, e.to_string()))?;
        if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
            return Err(Error::data(
                origin,
                format!("unsupported checkpoint {} v{}", file.format, file.version),
            ));
        }
        Ok(file)
    }

    pub fn config<C: DeserializeOwned>(&self, origin: &str) -> Result<C> {
        serde_json::from_value(self.config.clone()).map_err(|e| Error::data(origin, format!("config: {e}")))
    }

    /// Copies stored tensors into `params`, which must have the same names
    /// and sizes in the same order.
    pub fn restore<P: ParamSet>(&self, params: &mut P, origin: &str) -> Result<()> {
        let targets = params.tensors_mut();
        if targets.len() != self.tensors.len() {
            return Err(Error::data(
                origin,
                format!("expected {} tensors, found {}", targets.len(), self.tensors.len()),
            ));
        }
        for (dst, src) in targets.into_iter().zip(&self.tensors) {
            if dst.name != src.name || dst.data.len() != src.data.len() {
                return Err(Error::data(
                    origin,
                    format!("tensor {} ({} values) does not fit {} ({} values)", src.name, src.data.len(), dst.name, dst.data.len()),
                ));
            }
            if src.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(origin, format!("tensor {} holds non-finite values", src.name)));
            }
            dst.data.copy_from_slice(&src.data);
        }
        Ok(())
    }
}
