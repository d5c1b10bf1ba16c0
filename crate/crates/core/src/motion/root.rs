use ndarray::ArrayView2;

use super::layout::{FeatureGroup, PoseLayout};

/// World root position per frame. Heading integrates the angular velocity;
/// ground position integrates the linear velocity rotated by the heading of
/// the previous frame; height is read directly.
pub fn root_trajectory(x: ArrayView2<'_, f64>, layout: &PoseLayout) -> Vec<[f64; 3]> {
    let ra = layout.range(FeatureGroup::RootAngularVelocity).start;
    let rl = layout.range(FeatureGroup::RootLinearVelocity).start;
    let rh = layout.range(FeatureGroup::RootHeight).start;
    let (mut theta, mut px, mut pz) = (0.0f64, 0.0f64, 0.0f64);
    let mut out = Vec::with_capacity(x.nrows());
    for t in 0..x.nrows() {
        if t > 0 {
            let (vx, vz) = (x[[t - 1, rl]], x[[t - 1, rl + 1]]);
            let (s, c) = theta.sin_cos();
            px += c * vx + s * vz;
            pz += -s * vx + c * vz;
            theta += x[[t - 1, ra]];
        }
        out.push([px, x[[t, rh]], pz]);
    }
    out
}
