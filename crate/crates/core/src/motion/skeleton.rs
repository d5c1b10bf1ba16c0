//! Joint hierarchy and body-part assignment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six canonical body parts a text instruction can address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BodyPart {
    LeftArm,
    RightArm,
    LeftLeg,
    RightLeg,
    Torso,
    Pelvis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl BodyPart {
    pub const ALL: [BodyPart; 6] = [
        BodyPart::LeftArm,
        BodyPart::RightArm,
        BodyPart::LeftLeg,
        BodyPart::RightLeg,
        BodyPart::Torso,
        BodyPart::Pelvis,
    ];

    /// Limbs in the order used by part-energy scoring.
    pub const LIMBS: [BodyPart; 4] = [
        BodyPart::LeftArm,
        BodyPart::RightArm,
        BodyPart::LeftLeg,
        BodyPart::RightLeg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyPart::LeftArm => "left arm",
            BodyPart::RightArm => "right arm",
            BodyPart::LeftLeg => "left leg",
            BodyPart::RightLeg => "right leg",
            BodyPart::Torso => "torso",
            BodyPart::Pelvis => "pelvis",
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            BodyPart::LeftArm | BodyPart::LeftLeg => Some(Side::Left),
            BodyPart::RightArm | BodyPart::RightLeg => Some(Side::Right),
            BodyPart::Torso | BodyPart::Pelvis => None,
        }
    }

    pub fn arm(side: Side) -> Self {
        match side {
            Side::Left => BodyPart::LeftArm,
            Side::Right => BodyPart::RightArm,
        }
    }

    pub fn leg(side: Side) -> Self {
        match side {
            Side::Left => BodyPart::LeftLeg,
            Side::Right => BodyPart::RightLeg,
        }
    }

    /// Part used by the five-part graph partition: the pelvis joins the torso.
    pub fn graph_part(self) -> GraphPart {
        match self {
            BodyPart::LeftArm => GraphPart::LeftArm,
            BodyPart::RightArm => GraphPart::RightArm,
            BodyPart::LeftLeg => GraphPart::LeftLeg,
            BodyPart::RightLeg => GraphPart::RightLeg,
            BodyPart::Torso | BodyPart::Pelvis => GraphPart::Torso,
        }
    }
}

impl fmt::Display for BodyPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BodyPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '-'], " ");
        BodyPart::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| Error::UnknownPart(s.to_string()))
    }
}

impl From<BodyPart> for String {
    fn from(p: BodyPart) -> Self {
        p.name().to_string()
    }
}

impl TryFrom<String> for BodyPart {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Five-way partition used by the part graph convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphPart {
    LeftArm,
    RightArm,
    Torso,
    LeftLeg,
    RightLeg,
}

impl GraphPart {
    pub const ALL: [GraphPart; 5] = [
        GraphPart::LeftArm,
        GraphPart::RightArm,
        GraphPart::Torso,
        GraphPart::LeftLeg,
        GraphPart::RightLeg,
    ];

    pub fn index(self) -> usize {
        GraphPart::ALL.iter().position(|&p| p == self).unwrap()
    }
}

/// SMPL body joints, index = joint id.
pub const SMPL_JOINT_NAMES: [&str; 22] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
];

pub const SMPL_PARENTS: [Option<usize>; 22] = [
    None,
    Some(0),
    Some(0),
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(9),
    Some(9),
    Some(12),
    Some(13),
    Some(14),
    Some(16),
    Some(17),
    Some(18),
    Some(19),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    names: Vec<String>,
    parents: Vec<Option<usize>>,
    parts: Vec<BodyPart>,
}

impl Skeleton {
    /// Validates that `parents` describes a single tree rooted at joint 0.
    pub fn new(names: Vec<String>, parents: Vec<Option<usize>>, parts: Vec<BodyPart>) -> Result<Self> {
        let n = parents.len();
        if names.len() != n || parts.len() != n {
            return Err(Error::shape("skeleton tables", n, format!("{}/{}", names.len(), parts.len())));
        }
        if n == 0 || parents[0].is_some() {
            return Err(Error::InvalidArgument("joint 0 must be the only root".into()));
        }
        for (j, p) in parents.iter().enumerate().skip(1) {
            match p {
                None => return Err(Error::InvalidArgument(format!("joint {j} has no parent"))),
                Some(p) if *p >= n => return Err(Error::InvalidJoint(*p)),
                Some(_) => {}
            }
        }
        // every joint must reach the root without revisiting a node
        for start in 0..n {
            let mut j = start;
            let mut hops = 0;
            while let Some(p) = parents[j] {
                j = p;
                hops += 1;
                if hops > n {
                    return Err(Error::InvalidArgument(format!("cycle through joint {start}")));
                }
            }
        }
        Ok(Self { names, parents, parts })
    }

    pub fn num_joints(&self) -> usize {
        self.parents.len()
    }

    pub fn name(&self, joint: usize) -> &str {
        &self.names[joint]
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    pub fn part(&self, joint: usize) -> BodyPart {
        self.parts[joint]
    }

    /// Tree edges as `(parent, child)`, ordered by child id.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .filter_map(|(j, p)| p.map(|p| (p, j)))
            .collect()
    }

    pub fn joints_of(&self, part: BodyPart) -> Vec<usize> {
        (0..self.num_joints()).filter(|&j| self.parts[j] == part).collect()
    }

    /// Same tree with joints renumbered: new joint `perm[j]` is old joint `j`.
    /// The root must stay at index 0.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_joints();
        if perm.len() != n || perm[0] != 0 {
            return Err(Error::InvalidArgument("permutation must keep the root at 0".into()));
        }
        let mut names = vec![String::new(); n];
        let mut parents = vec![None; n];
        let mut parts = vec![BodyPart::Pelvis; n];
        for old in 0..n {
            let new = perm[old];
            names[new] = self.names[old].clone();
            parents[new] = self.parents[old].map(|p| perm[p]);
            parts[new] = self.parts[old];
        }
        Skeleton::new(names, parents, parts)
    }
}

/// The 22-joint SMPL body with anatomical part assignment.
pub fn canonical_skeleton() -> Skeleton {
    use BodyPart::*;
    let parts = (0..22)
        .map(|j| match j {
            0 => Pelvis,
            1 | 4 | 7 | 10 => LeftLeg,
            2 | 5 | 8 | 11 => RightLeg,
            3 | 6 | 9 | 12 | 15 => Torso,
            13 | 16 | 18 | 20 => LeftArm,
            14 | 17 | 19 | 21 => RightArm,
            _ => unreachable!(),
        })
        .collect();
    Skeleton::new(
        SMPL_JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
        SMPL_PARENTS.to_vec(),
        parts,
    )
    .expect("SMPL table is a tree")
}
