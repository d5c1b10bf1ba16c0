//! Procedural motion recipes.

use serde::{Deserialize, Serialize};

use crate::motion::BodyPart;

/// One oscillating body part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartOscillation {
    pub part: BodyPart,
    /// Peak displacement of the distal joint, in position units.
    pub amplitude: f64,
    /// Peak deviation of the 6D rotation components.
    pub rotation_amplitude: f64,
    /// Cycles per second.
    pub frequency: f64,
    /// Phase offset in radians.
    pub phase: f64,
    /// Displacement direction before scaling.
    pub direction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRecipe {
    pub name: String,
    pub oscillations: Vec<PartOscillation>,
    /// Vertical root bob amplitude.
    pub root_bob: f64,
    pub frames: usize,
    pub fps: f64,
    pub noise: f64,
    /// Caption templates; each braced span is an interaction phrase.
    pub templates: Vec<String>,
}

pub const DEFAULT_FRAMES: usize = 16;
pub const DEFAULT_FPS: f64 = 20.0;
pub const DEFAULT_NOISE: f64 = 0.004;

impl SynthRecipe {
    pub fn is_none(&self) -> bool {
        self.oscillations.is_empty()
    }

    pub fn parts(&self) -> Vec<BodyPart> {
        self.oscillations.iter().map(|o| o.part).collect()
    }

    pub fn with_frames(mut self, frames: usize) -> Self {
        self.frames = frames;
        self
    }

    /// Both recipes at once; captions join one template of each with
    /// "while".
    pub fn combine(&self, other: &SynthRecipe) -> SynthRecipe {
        let mut oscillations = self.oscillations.clone();
        oscillations.extend(other.oscillations.iter().cloned());
        let templates = self
            .templates
            .iter()
            .zip(&other.templates)
            .map(|(a, b)| format!("{} while {}", a, strip_subject(b)))
            .collect();
        SynthRecipe {
            name: format!("{}+{}", self.name, other.name),
            oscillations,
            root_bob: self.root_bob.max(other.root_bob),
            frames: self.frames,
            fps: self.fps,
            noise: self.noise,
            templates,
        }
    }
}

fn strip_subject(template: &str) -> &str {
    template.find('{').map_or(template, |at| &template[at..])
}

fn oscillation(part: BodyPart, amplitude: f64, direction: [f64; 3], phase: f64) -> PartOscillation {
    PartOscillation {
        part,
        amplitude,
        rotation_amplitude: 0.5,
        frequency: DEFAULT_FPS / DEFAULT_FRAMES as f64,
        phase,
        direction,
    }
}

fn recipe(name: &str, oscillations: Vec<PartOscillation>, root_bob: f64, templates: &[&str]) -> SynthRecipe {
    SynthRecipe {
        name: name.into(),
        oscillations,
        root_bob,
        frames: DEFAULT_FRAMES,
        fps: DEFAULT_FPS,
        noise: DEFAULT_NOISE,
        templates: templates.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn wave_left_arm() -> SynthRecipe {
    recipe(
        "wave-left-arm",
        vec![oscillation(BodyPart::LeftArm, 0.3, [0.6, 0.8, 0.0], 0.0)],
        0.0,
        &[
            "a person {waves with the left arm}",
            "someone stands and {waves the left hand}",
            "the person {waves the left arm in the air}",
        ],
    )
}

pub fn wave_right_arm() -> SynthRecipe {
    recipe(
        "wave-right-arm",
        vec![oscillation(BodyPart::RightArm, 0.3, [-0.6, 0.8, 0.0], 0.0)],
        0.0,
        &[
            "a person {waves with the right arm}",
            "someone stands and {waves the right hand}",
            "the person {waves the right arm in the air}",
        ],
    )
}

pub fn kick_left_leg() -> SynthRecipe {
    recipe(
        "kick-left-leg",
        vec![oscillation(BodyPart::LeftLeg, 0.3, [0.0, 0.45, 0.9], std::f64::consts::FRAC_PI_2)],
        0.0,
        &[
            "a person {kicks a ball with the left leg}",
            "someone {kicks forward with the left foot}",
            "a person stands still then {kicks with the left leg}",
        ],
    )
}

pub fn kick_right_leg() -> SynthRecipe {
    recipe(
        "kick-right-leg",
        vec![oscillation(BodyPart::RightLeg, 0.3, [0.0, 0.45, 0.9], std::f64::consts::FRAC_PI_2)],
        0.0,
        &[
            "a person {kicks a ball with the right leg}",
            "someone {kicks forward with the right foot}",
            "a person stands still then {kicks with the right leg}",
        ],
    )
}

pub fn torso_bend() -> SynthRecipe {
    recipe(
        "torso-bend",
        vec![oscillation(BodyPart::Torso, 0.15, [0.0, -0.3, 0.95], 0.0)],
        0.0,
        &[
            "a person {bends the torso forward}",
            "someone {leans forward at the waist}",
            "the person {bows deeply}",
        ],
    )
}

pub fn walk_in_place() -> SynthRecipe {
    recipe(
        "walk-in-place",
        Vec::new(),
        0.01,
        &["a person walks in place", "someone jogs on the spot", "the person marches in place slowly"],
    )
}

pub fn stand() -> SynthRecipe {
    recipe(
        "stand",
        Vec::new(),
        0.0,
        &["a person stands still", "someone is standing idle", "the person waits without moving"],
    )
}

/// Four interactive recipes and two non-interactive ones.
pub fn default_recipes() -> Vec<SynthRecipe> {
    vec![wave_left_arm(), wave_right_arm(), kick_left_leg(), kick_right_leg(), walk_in_place(), stand()]
}

pub fn recipe_by_name(name: &str) -> Option<SynthRecipe> {
    let all = [wave_left_arm(), wave_right_arm(), kick_left_leg(), kick_right_leg(), torso_bend(), walk_in_place(), stand()];
    if let Some(r) = all.iter().find(|r| r.name == name) {
        return Some(r.clone());
    }
    let (a, b) = name.split_once('+')?;
    Some(recipe_by_name(a)?.combine(&recipe_by_name(b)?))
}
