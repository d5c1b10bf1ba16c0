//! Which body part moves most, as a proxy for part-level semantic accuracy.

use crate::error::{Error, Result};
use crate::motion::{BodyPart, Skeleton};

use super::joints::JointPositions;

/// Mean root-relative per-frame displacement of the joints of `part`.
pub fn part_energy(motion: &JointPositions, skeleton: &Skeleton, part: BodyPart) -> f64 {
    let p = &motion.positions;
    let t_len = motion.num_frames();
    let joints = skeleton.joints_of(part);
    if t_len < 2 || joints.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for t in 1..t_len {
        for &j in &joints {
            let mut sq = 0.0;
            for a in 0..3 {
                let now = p[[t, j, a]] - p[[t, 0, a]];
                let before = p[[t - 1, j, a]] - p[[t - 1, 0, a]];
                sq += (now - before).powi(2);
            }
            sum += sq.sqrt();
        }
    }
    sum / ((t_len - 1) * joints.len()) as f64
}

/// Scores 1 when the instructed part strictly out-moves each of the four
/// limbs (other than itself); ties score 0.
pub fn part_energy_accuracy(motions: &[JointPositions], instructed: &[BodyPart], skeleton: &Skeleton) -> Result<f64> {
    if motions.is_empty() {
        return Err(Error::EmptyDataset("no motions to score".into()));
    }
    if motions.len() != instructed.len() {
        return Err(Error::InvalidArgument(format!("{} motions but {} instructed parts", motions.len(), instructed.len())));
    }
    let mut hits = 0usize;
    for (m, &part) in motions.iter().zip(instructed) {
        let own = part_energy(m, skeleton, part);
        let wins = BodyPart::LIMBS
            .iter()
            .filter(|&&l| l != part)
            .all(|&l| own > part_energy(m, skeleton, l));
        if wins {
            hits += 1;
        }
    }
    Ok(hits as f64 / motions.len() as f64)
}
