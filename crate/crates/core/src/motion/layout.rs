//! Flat pose-vector layout.
//!
//! A pose row is laid out as `[root angular velocity (1), root linear
//! velocity (2), root height (1), joint positions, joint velocities, joint
//! rotations, foot contacts]`. Positions and rotations skip the root joint;
//! velocities cover every joint. With 22 joints and four contact joints the
//! row is 263 wide.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag written into motion files so readers can detect foreign orderings.
pub const DIM_ORDER_TAG: &str = "ra,rl,rh,pos,vel,rot,contact";

pub const CANONICAL_NUM_JOINTS: usize = 22;
pub const CANONICAL_CONTACT_JOINTS: [usize; 4] = [7, 10, 8, 11];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureGroup {
    RootAngularVelocity,
    RootLinearVelocity,
    RootHeight,
    JointPositions,
    JointVelocities,
    JointRotations,
    FootContacts,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 7] = [
        FeatureGroup::RootAngularVelocity,
        FeatureGroup::RootLinearVelocity,
        FeatureGroup::RootHeight,
        FeatureGroup::JointPositions,
        FeatureGroup::JointVelocities,
        FeatureGroup::JointRotations,
        FeatureGroup::FootContacts,
    ];
}

/// Who owns a single pose dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimOwner {
    /// Root angular velocity, linear velocity or height.
    Root,
    Position(usize),
    Velocity(usize),
    Rotation(usize),
    /// Foot-contact flag of the given joint.
    Contact(usize),
}

impl DimOwner {
    /// Joint the dimension belongs to; root kinematics count as joint 0.
    pub fn joint(self) -> usize {
        match self {
            DimOwner::Root => 0,
            DimOwner::Position(j)
            | DimOwner::Velocity(j)
            | DimOwner::Rotation(j)
            | DimOwner::Contact(j) => j,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoseLayout {
    num_joints: usize,
    contact_joints: Vec<usize>,
    total_dim: usize,
}

impl PoseLayout {
    pub fn new(num_joints: usize, contact_joints: &[usize]) -> Result<Self> {
        if num_joints < 2 {
            return Err(Error::InvalidArgument(format!(
                "a layout needs at least 2 joints, got {num_joints}"
            )));
        }
        for (i, &j) in contact_joints.iter().enumerate() {
            if j >= num_joints {
                return Err(Error::InvalidJoint(j));
            }
            if contact_joints[..i].contains(&j) {
                return Err(Error::InvalidArgument(format!("duplicate contact joint {j}")));
            }
        }
        let total_dim = 4
            + 3 * (num_joints - 1)
            + 3 * num_joints
            + 6 * (num_joints - 1)
            + contact_joints.len();
        Ok(Self {
            num_joints,
            contact_joints: contact_joints.to_vec(),
            total_dim,
        })
    }

    /// 22 joints, contacts on both ankles and feet: 263 dims.
    pub fn canonical() -> Self {
        Self::new(CANONICAL_NUM_JOINTS, &CANONICAL_CONTACT_JOINTS).expect("canonical layout is valid")
    }

    pub fn num_joints(&self) -> usize {
        self.num_joints
    }

    pub fn contact_joints(&self) -> &[usize] {
        &self.contact_joints
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn group_len(&self, group: FeatureGroup) -> usize {
        let n = self.num_joints;
        match group {
            FeatureGroup::RootAngularVelocity => 1,
            FeatureGroup::RootLinearVelocity => 2,
            FeatureGroup::RootHeight => 1,
            FeatureGroup::JointPositions => 3 * (n - 1),
            FeatureGroup::JointVelocities => 3 * n,
            FeatureGroup::JointRotations => 6 * (n - 1),
            FeatureGroup::FootContacts => self.contact_joints.len(),
        }
    }

    pub fn range(&self, group: FeatureGroup) -> Range<usize> {
        let mut start = 0;
        for g in FeatureGroup::ALL {
            let len = self.group_len(g);
            if g == group {
                return start..start + len;
            }
            start += len;
        }
        unreachable!("every group is in FeatureGroup::ALL")
    }

    /// Root-relative position triplet; `None` for the root.
    pub fn position_dims(&self, joint: usize) -> Option<Range<usize>> {
        if joint == 0 || joint >= self.num_joints {
            return None;
        }
        let start = self.range(FeatureGroup::JointPositions).start + 3 * (joint - 1);
        Some(start..start + 3)
    }

    pub fn velocity_dims(&self, joint: usize) -> Option<Range<usize>> {
        if joint >= self.num_joints {
            return None;
        }
        let start = self.range(FeatureGroup::JointVelocities).start + 3 * joint;
        Some(start..start + 3)
    }

    /// 6D rotation of a non-root joint; `None` for the root.
    pub fn rotation_dims(&self, joint: usize) -> Option<Range<usize>> {
        if joint == 0 || joint >= self.num_joints {
            return None;
        }
        let start = self.range(FeatureGroup::JointRotations).start + 6 * (joint - 1);
        Some(start..start + 6)
    }

    /// Dimension of the foot-contact flag for `joint`, if it is a contact joint.
    pub fn contact_dim(&self, joint: usize) -> Option<usize> {
        let start = self.range(FeatureGroup::FootContacts).start;
        self.contact_joints
            .iter()
            .position(|&j| j == joint)
            .map(|i| start + i)
    }

    pub fn owner(&self, dim: usize) -> Option<DimOwner> {
        if dim >= self.total_dim {
            return None;
        }
        let pos = self.range(FeatureGroup::JointPositions);
        let vel = self.range(FeatureGroup::JointVelocities);
        let rot = self.range(FeatureGroup::JointRotations);
        let contact = self.range(FeatureGroup::FootContacts);
        Some(if dim < pos.start {
            DimOwner::Root
        } else if pos.contains(&dim) {
            DimOwner::Position(1 + (dim - pos.start) / 3)
        } else if vel.contains(&dim) {
            DimOwner::Velocity((dim - vel.start) / 3)
        } else if rot.contains(&dim) {
            DimOwner::Rotation(1 + (dim - rot.start) / 6)
        } else {
            DimOwner::Contact(self.contact_joints[dim - contact.start])
        })
    }
}

/// Builds a layout for `num_joints` joints with foot-contact flags on `contact_joints`.
pub fn build_layout(num_joints: usize, contact_joints: &[usize]) -> Result<PoseLayout> {
    PoseLayout::new(num_joints, contact_joints)
}
