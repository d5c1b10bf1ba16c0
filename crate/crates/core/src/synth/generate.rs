//! Rendering recipes into pose sequences and captions.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::recipe::SynthRecipe;
use crate::diffusion::rng_stream;
use crate::error::{Error, Result};
use crate::motion::{canonical_skeleton, root_trajectory, BodyPart, FeatureGroup, MotionSequence, PoseLayout, SMPL_PARENTS};
use crate::semantics::{InteractionPair, InteractionSpec};

/// Rest-pose offset of each joint from its parent.
const REST_OFFSETS: [[f64; 3]; 22] = [
    [0.0, 0.0, 0.0],
    [0.06, -0.09, 0.0],
    [-0.06, -0.09, 0.0],
    [0.0, 0.11, 0.0],
    [0.04, -0.38, 0.0],
    [-0.04, -0.38, 0.0],
    [0.0, 0.14, 0.0],
    [0.0, -0.40, -0.04],
    [0.0, -0.40, -0.04],
    [0.0, 0.05, 0.03],
    [0.02, -0.06, 0.12],
    [-0.02, -0.06, 0.12],
    [0.0, 0.21, -0.03],
    [0.08, 0.12, -0.02],
    [-0.08, 0.12, -0.02],
    [0.0, 0.09, 0.05],
    [0.12, 0.05, 0.0],
    [-0.12, 0.05, 0.0],
    [0.26, 0.0, -0.02],
    [-0.26, 0.0, -0.02],
    [0.26, 0.0, 0.0],
    [-0.26, 0.0, 0.0],
];

const ROOT_HEIGHT: f64 = 0.93;
const IDENTITY_ROT6: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
const ROTATION_PATTERN: [f64; 6] = [0.5, -0.3, 0.4, 0.2, -0.5, 0.3];

/// Root-relative rest positions of the canonical skeleton.
pub fn rest_pose() -> [[f64; 3]; 22] {
    let mut out = [[0.0; 3]; 22];
    for j in 1..22 {
        let p = SMPL_PARENTS[j].expect("non-root joint");
        for a in 0..3 {
            out[j][a] = out[p][a] + REST_OFFSETS[j][a];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecord {
    pub recipe: String,
    pub motion: MotionSequence,
    pub caption: String,
    pub spec: InteractionSpec,
}

/// Removes braces from a template, returning the caption and the braced
/// phrases in order.
pub fn render_template(template: &str) -> Result<(String, Vec<String>)> {
    let mut caption = String::new();
    let mut phrases = Vec::new();
    let mut current: Option<String> = None;
    for c in template.chars() {
        match (c, current.as_mut()) {
            ('{', None) => current = Some(String::new()),
            ('}', Some(_)) => phrases.push(current.take().expect("open phrase")),
            ('{' | '}', _) => return Err(Error::InvalidArgument(format!("unbalanced braces in {template:?}"))),
            (_, Some(p)) => {
                p.push(c);
                caption.push(c);
            }
            (_, None) => caption.push(c),
        }
    }
    if current.is_some() {
        return Err(Error::InvalidArgument(format!("unbalanced braces in {template:?}")));
    }
    Ok((caption, phrases))
}

fn validate(recipe: &SynthRecipe) -> Result<()> {
    if recipe.frames == 0 || recipe.fps.is_nan() || recipe.fps <= 0.0 || recipe.templates.is_empty() {
        return Err(Error::InvalidArgument(format!("recipe {} needs frames, fps and templates", recipe.name)));
    }
    for o in &recipe.oscillations {
        if o.amplitude <= recipe.noise {
            return Err(Error::InvalidArgument(format!("recipe {}: amplitude must exceed the noise level", recipe.name)));
        }
    }
    for t in &recipe.templates {
        let (_, phrases) = render_template(t)?;
        if phrases.len() != recipe.oscillations.len() {
            return Err(Error::InvalidArgument(format!(
                "recipe {}: template {t:?} has {} phrases for {} parts",
                recipe.name,
                phrases.len(),
                recipe.oscillations.len()
            )));
        }
    }
    Ok(())
}

pub fn synth_motion(recipe: &SynthRecipe, seed: u64) -> Result<SynthRecord> {
    validate(recipe)?;
    let mut rng = rng_stream(seed, 0x53594e);
    let layout = PoseLayout::canonical();
    let skeleton = canonical_skeleton();
    let noise = Normal::new(0.0, recipe.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (t_len, d) = (recipe.frames, layout.total_dim());
    let rest = rest_pose();

    let template = &recipe.templates[rng.gen_range(0..recipe.templates.len())];
    let (caption, phrases) = render_template(template)?;

    let mut x = Array2::<f64>::zeros((t_len, d));
    let ra = layout.range(FeatureGroup::RootAngularVelocity).start;
    let rl = layout.range(FeatureGroup::RootLinearVelocity).start;
    let rh = layout.range(FeatureGroup::RootHeight).start;
    let bob_freq = 2.0 * std::f64::consts::TAU * DEFAULT_CYCLES / t_len as f64;
    for t in 0..t_len {
        x[[t, ra]] = noise.sample(&mut rng) * 0.1;
        x[[t, rl]] = noise.sample(&mut rng) * 0.1;
        x[[t, rl + 1]] = noise.sample(&mut rng) * 0.1;
        x[[t, rh]] = ROOT_HEIGHT + recipe.root_bob * (bob_freq * t as f64).sin() + noise.sample(&mut rng);
        for (j, r) in rest.iter().enumerate().skip(1) {
            for (a, dim) in layout.position_dims(j).expect("non-root").enumerate() {
                x[[t, dim]] = r[a] + noise.sample(&mut rng);
            }
            for (a, dim) in layout.rotation_dims(j).expect("non-root").enumerate() {
                x[[t, dim]] = IDENTITY_ROT6[a] + noise.sample(&mut rng);
            }
        }
        for &c in layout.contact_joints() {
            x[[t, layout.contact_dim(c).expect("contact joint")]] = 1.0;
        }
    }

    for osc in &recipe.oscillations {
        let gain = rng.gen_range(0.9..1.1);
        let phase = osc.phase + rng.gen_range(-0.15..0.15);
        let joints = skeleton.joints_of(osc.part);
        for t in 0..t_len {
            let s = (std::f64::consts::TAU * osc.frequency * t as f64 / recipe.fps + phase).sin();
            for (k, &j) in joints.iter().enumerate() {
                if j == 0 {
                    continue;
                }
                let w = gain * (k + 1) as f64 / joints.len() as f64;
                for (a, dim) in layout.position_dims(j).expect("non-root").enumerate() {
                    x[[t, dim]] += osc.amplitude * w * osc.direction[a] * s;
                }
                for (a, dim) in layout.rotation_dims(j).expect("non-root").enumerate() {
                    x[[t, dim]] += osc.rotation_amplitude * w * ROTATION_PATTERN[a] * s;
                }
                if let Some(cd) = layout.contact_dim(j) {
                    x[[t, cd]] = if s > 0.0 { 0.0 } else { 1.0 };
                }
            }
        }
    }
    fill_velocities(&mut x, &layout);

    let spec = if recipe.is_none() {
        InteractionSpec::none(&caption)
    } else {
        let pairs = recipe
            .oscillations
            .iter()
            .zip(phrases)
            .map(|(o, phrase)| InteractionPair { part: o.part, phrase })
            .collect();
        InteractionSpec::new(&caption, pairs)
    };
    Ok(SynthRecord {
        recipe: recipe.name.clone(),
        motion: MotionSequence::new(x, layout, recipe.fps)?,
        caption,
        spec,
    })
}

const DEFAULT_CYCLES: f64 = 1.0;

/// Forward differences of positions (world root position for joint 0), the
/// last frame repeating the previous velocity.
pub fn fill_velocities(x: &mut Array2<f64>, layout: &PoseLayout) {
    let t_len = x.nrows();
    let world_root = root_trajectory(x.view(), layout);
    for j in 0..layout.num_joints() {
        let vel = layout.velocity_dims(j).expect("every joint has velocity");
        let pos = layout.position_dims(j);
        for t in 0..t_len {
            let src = if t + 1 < t_len { t } else { t.saturating_sub(1) };
            for (a, vd) in vel.clone().enumerate() {
                x[[t, vd]] = if t_len < 2 {
                    0.0
                } else {
                    match &pos {
                        Some(p) => x[[src + 1, p.start + a]] - x[[src, p.start + a]],
                        None => world_root[src + 1][a] - world_root[src][a],
                    }
                };
            }
        }
    }
}

/// Body parts whose dims a record actively moves.
pub fn active_parts(record: &SynthRecord) -> Vec<BodyPart> {
    record.spec.parts().into_iter().collect()
}
