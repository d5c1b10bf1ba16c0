//! Evaluation metrics over decoded joints and shared text-motion embeddings.

mod encoder;
mod energy;
mod errors;
mod joints;
mod report;
mod retrieval;

pub use encoder::{pooled_features, train_motion_encoder, EncoderTrainConfig, LinearMotionEncoder, MotionEmbedder};
pub use energy::{part_energy, part_energy_accuracy};
pub use errors::{foot_jpe, hand_jpe, joint_subset_jpe, mpjpe, mpvpe, FOOT_JOINTS, HAND_JOINTS};
pub use joints::{to_joint_positions, JointPositions};
pub use report::{MetricEntry, MetricReport};
pub use retrieval::{mm_dist, r_precision, r_precision_top3, DEFAULT_POOL_SIZE};
