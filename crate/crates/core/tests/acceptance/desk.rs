use std::time::Instant;

use partmotion::eval::{evaluate_bundle, EvalConfig};
use partmotion::pipeline::{train_all, FallbackExtractor, PipelineConfig};
use partmotion::synth::{default_recipes, synth_items, Split, DEFAULT_FRAMES};

use crate::Outcome;

pub const TRAIN_STEPS: usize = 600;

/// Six recipes x 30 records of 16 frames; the held-out sixth of each recipe
/// is generated from its caption and scored.
pub fn desk_experiment() -> Outcome {
    let recipes = default_recipes();
    let items = synth_items(&recipes, 30, 0).unwrap();
    let test = items.iter().filter(|i| i.split == Split::Test).count();
    let mut cfg = PipelineConfig::default();
    cfg.train.steps = TRAIN_STEPS;
    let start = Instant::now();
    let (bundle, _) = train_all(&items, &cfg).unwrap();
    let train_secs = start.elapsed().as_secs_f64();
    let (report, _) = evaluate_bundle(&bundle, &items, &FallbackExtractor, &EvalConfig::default()).unwrap();
    let acc = report.get("part_energy_accuracy").unwrap_or(f64::NAN);
    let ours = report.get("masked_part_mpjpe").unwrap_or(f64::NAN);
    let base = report.get("baseline_masked_part_mpjpe").unwrap_or(f64::NAN);
    let gain = (base - ours) / base;
    let shape_ok = recipes.len() == 6 && items.len() == 180 && items.iter().all(|i| i.motion.num_frames() == DEFAULT_FRAMES);
    Outcome::new(
        shape_ok && acc >= 0.8 && gain >= 0.2 && train_secs <= 900.0,
        format!(
            "{} items ({test} held out), training {train_secs:.0}s; part energy accuracy {acc:.3}; \
             masked-part MPJPE {ours:.4} vs baseline {base:.4} ({:.0}% better); R-precision {:.3}, MM-Dist {:.3}",
            items.len(),
            gain * 100.0,
            report.get("r_precision_top3").unwrap_or(f64::NAN),
            report.get("mm_dist").unwrap_or(f64::NAN),
        ),
    )
}
