//! Part-aware interactive motion synthesis.
//!
//! A text description is split into interaction instructions per body part,
//! the interacting parts are generated first by a conditional diffusion model,
//! and a second model fills in the rest of the body guided by a part graph
//! convolution over the generated parts.

pub mod denoiser;
pub mod cli;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod gcn;
pub mod metrics;
pub mod motion;
pub mod pipeline;
pub mod semantics;
pub mod synth;

pub use error::{Error, Result};
