//! Pose layout, skeleton, part masks and motion containers.

mod layout;
mod mask;
mod root;
mod sequence;
mod skeleton;

pub use layout::{
    build_layout, DimOwner, FeatureGroup, PoseLayout, CANONICAL_CONTACT_JOINTS, CANONICAL_NUM_JOINTS,
    DIM_ORDER_TAG,
};
pub use root::root_trajectory;
pub use mask::{dim_part, gather_masked, part_mask, part_mask_by_names, scatter_masked, PartMask};
pub use sequence::{MotionSequence, MOTION_FORMAT, MOTION_FORMAT_VERSION};
pub use skeleton::{canonical_skeleton, BodyPart, GraphPart, Side, Skeleton, SMPL_JOINT_NAMES, SMPL_PARENTS};
