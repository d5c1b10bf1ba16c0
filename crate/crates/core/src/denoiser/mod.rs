//! Clean-motion predictor, condition encoders, objectives and optimizers.

pub mod checkpoint;
mod embed;
mod linear;
mod loss;
mod model;
mod optim;
mod params;

pub use embed::{sinusoid, text_encode, time_embed, HashedTextEncoder, TextEncoder};
pub use linear::Linear;
pub use loss::{stage1_loss, stage2_loss, DenoiseExample, LossOutput};
pub use model::{
    mask_project, ConditionBundle, DenoiserConfig, DenoiserInput, DenoiserParams, DropFlags, ForwardCache,
    X0Predictor,
};
pub use optim::{adam_step, sgd_step, AdamState};
pub use params::{ParamSet, TensorMut, TensorRef};
