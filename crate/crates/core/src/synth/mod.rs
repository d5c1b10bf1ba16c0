//! Procedural part-labeled motion data for training and evaluation.

mod dataset;
mod generate;
mod recipe;

pub use dataset::{
    assign_splits, build_dataset, load_dataset, load_manifest, save_manifest, synth_dataset, synth_items, DatasetItem,
    ManifestRecord, Split, MANIFEST_FILE, PAIR_SEPARATOR, TEST_FRACTION,
};
pub use generate::{active_parts, fill_velocities, render_template, rest_pose, synth_motion, SynthRecord};
pub use recipe::{
    default_recipes, kick_left_leg, kick_right_leg, recipe_by_name, stand, torso_bend, walk_in_place, wave_left_arm,
    wave_right_arm, PartOscillation, SynthRecipe, DEFAULT_FPS, DEFAULT_FRAMES, DEFAULT_NOISE,
};
