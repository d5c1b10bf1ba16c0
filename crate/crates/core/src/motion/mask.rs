//! Binary part masks over pose dimensions.

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView2};

use super::layout::{DimOwner, PoseLayout};
use super::skeleton::{BodyPart, Skeleton};
use crate::error::{Error, Result};

/// Time-constant selection of pose dimensions owned by a set of parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartMask {
    bits: Vec<bool>,
    parts: BTreeSet<BodyPart>,
}

impl PartMask {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn parts(&self) -> &BTreeSet<BodyPart> {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of selected dimensions.
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_set(&self, dim: usize) -> bool {
        self.bits[dim]
    }

    /// Bits as 0.0 / 1.0, the form fed to the mask projection.
    pub fn to_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    /// The reversed mask `1 - m`, owning the complementary part set.
    pub fn complement(&self) -> PartMask {
        PartMask {
            bits: self.bits.iter().map(|b| !b).collect(),
            parts: BodyPart::ALL
                .into_iter()
                .filter(|p| !self.parts.contains(p))
                .collect(),
        }
    }

    /// A mask from raw bits; the part set is left empty.
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self {
            bits,
            parts: BTreeSet::new(),
        }
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// Part owning a dimension: root kinematics go to the pelvis, contact flags to
/// the leg of their joint, everything else to the joint's part.
pub fn dim_part(layout: &PoseLayout, skeleton: &Skeleton, dim: usize) -> Option<BodyPart> {
    let owner = layout.owner(dim)?;
    Some(match owner {
        DimOwner::Root => BodyPart::Pelvis,
        other => skeleton.part(other.joint()),
    })
}

pub fn part_mask<I>(parts: I, layout: &PoseLayout, skeleton: &Skeleton) -> Result<PartMask>
where
    I: IntoIterator<Item = BodyPart>,
{
    if skeleton.num_joints() != layout.num_joints() {
        return Err(Error::shape(
            "part_mask skeleton",
            layout.num_joints(),
            skeleton.num_joints(),
        ));
    }
    let parts: BTreeSet<BodyPart> = parts.into_iter().collect();
    let bits = (0..layout.total_dim())
        .map(|d| {
            let owner = dim_part(layout, skeleton, d).expect("dim in range");
            parts.contains(&owner)
        })
        .collect();
    Ok(PartMask { bits, parts })
}

/// Like [`part_mask`] but with part names, e.g. `"left arm"`.
pub fn part_mask_by_names<S: AsRef<str>>(
    names: &[S],
    layout: &PoseLayout,
    skeleton: &Skeleton,
) -> Result<PartMask> {
    let parts = names
        .iter()
        .map(|n| n.as_ref().parse())
        .collect::<Result<Vec<BodyPart>>>()?;
    part_mask(parts, layout, skeleton)
}

/// Columns of `x` whose mask bit is set, in ascending dimension order.
pub fn gather_masked(x: ArrayView2<'_, f64>, mask: &PartMask) -> Result<Array2<f64>> {
    if x.ncols() != mask.len() {
        return Err(Error::shape("gather_masked", mask.len(), x.ncols()));
    }
    let cols: Vec<usize> = mask.selected().collect();
    Ok(x.select(ndarray::Axis(1), &cols))
}

/// Inverse of [`gather_masked`]: writes `compact` into the masked columns of `base`.
pub fn scatter_masked(compact: ArrayView2<'_, f64>, mask: &PartMask, base: &mut Array2<f64>) -> Result<()> {
    if base.ncols() != mask.len() {
        return Err(Error::shape("scatter_masked base", mask.len(), base.ncols()));
    }
    if compact.ncols() != mask.popcount() || compact.nrows() != base.nrows() {
        return Err(Error::shape(
            "scatter_masked compact",
            format!("{}x{}", base.nrows(), mask.popcount()),
            format!("{}x{}", compact.nrows(), compact.ncols()),
        ));
    }
    for (k, d) in mask.selected().enumerate() {
        base.column_mut(d).assign(&compact.column(k));
    }
    Ok(())
}
