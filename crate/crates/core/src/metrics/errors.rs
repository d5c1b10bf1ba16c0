//! Position and velocity errors between decoded joint sequences.

use ndarray::{s, ArrayView3};

use crate::error::{Error, Result};

pub const HAND_JOINTS: [usize; 2] = [20, 21];
pub const FOOT_JOINTS: [usize; 4] = [7, 8, 10, 11];

fn check(pred: &ArrayView3<'_, f64>, gt: &ArrayView3<'_, f64>) -> Result<()> {
    if pred.shape() != gt.shape() {
        return Err(Error::shape("metric inputs", format!("{:?}", gt.shape()), format!("{:?}", pred.shape())));
    }
    if pred.dim().2 != 3 || pred.dim().0 == 0 {
        return Err(Error::shape("metric inputs", "[T>=1, N, 3]", format!("{:?}", pred.shape())));
    }
    Ok(())
}

fn mean_distance(pred: ArrayView3<'_, f64>, gt: ArrayView3<'_, f64>, joints: &[usize]) -> f64 {
    let t_len = pred.dim().0;
    let mut sum = 0.0;
    for t in 0..t_len {
        for &j in joints {
            let d = &pred.slice(s![t, j, ..]) - &gt.slice(s![t, j, ..]);
            sum += d.dot(&d).sqrt();
        }
    }
    sum / (t_len * joints.len()) as f64
}

pub fn mpjpe(pred: ArrayView3<'_, f64>, gt: ArrayView3<'_, f64>) -> Result<f64> {
    check(&pred, &gt)?;
    let all: Vec<usize> = (0..pred.dim().1).collect();
    Ok(mean_distance(pred, gt, &all))
}

pub fn joint_subset_jpe(pred: ArrayView3<'_, f64>, gt: ArrayView3<'_, f64>, subset: &[usize]) -> Result<f64> {
    check(&pred, &gt)?;
    if subset.is_empty() {
        return Err(Error::InvalidArgument("joint subset is empty".into()));
    }
    if let Some(&j) = subset.iter().find(|&&j| j >= pred.dim().1) {
        return Err(Error::InvalidJoint(j));
    }
    Ok(mean_distance(pred, gt, subset))
}

pub fn hand_jpe(pred: ArrayView3<'_, f64>, gt: ArrayView3<'_, f64>) -> Result<f64> {
    joint_subset_jpe(pred, gt, &HAND_JOINTS)
}

pub fn foot_jpe(pred: ArrayView3<'_, f64>, gt: ArrayView3<'_, f64>) -> Result<f64> {
    joint_subset_jpe(pred, gt, &FOOT_JOINTS)
}

/// Error between frame-to-frame joint displacements.
pub fn mpvpe(pred: ArrayView3<'_, f64>, gt: ArrayView3<'_, f64>) -> Result<f64> {
    check(&pred, &gt)?;
    let t_len = pred.dim().0;
    if t_len < 2 {
        return Err(Error::InvalidArgument("velocity error needs at least two frames".into()));
    }
    let vp = &pred.slice(s![1.., .., ..]) - &pred.slice(s![..t_len - 1, .., ..]);
    let vg = &gt.slice(s![1.., .., ..]) - &gt.slice(s![..t_len - 1, .., ..]);
    let all: Vec<usize> = (0..pred.dim().1).collect();
    Ok(mean_distance(vp.view(), vg.view(), &all))
}
