use std::collections::HashSet;

use ndarray::{s, Array2};
use partmotion::metrics::{part_energy_accuracy, to_joint_positions};
use partmotion::motion::{canonical_skeleton, part_mask, BodyPart, PoseLayout};
use partmotion::semantics::fallback_rule_extractor;
use partmotion::synth::{
    build_dataset, default_recipes, load_dataset, load_manifest, recipe_by_name, render_template, stand, synth_dataset,
    synth_motion, torso_bend, walk_in_place, wave_left_arm, Split,
};

#[test]
fn template_phrases_agree_with_fallback_extractor() {
    let mut recipes = default_recipes();
    recipes.push(torso_bend());
    recipes.push(recipe_by_name("wave-left-arm+kick-right-leg").unwrap());
    for r in &recipes {
        for t in &r.templates {
            let (caption, phrases) = render_template(t).unwrap();
            let spec = fallback_rule_extractor(&caption);
            let got: Vec<(BodyPart, String)> = spec.pairs().iter().map(|p| (p.part, p.phrase.clone())).collect();
            let want: Vec<(BodyPart, String)> = r.parts().into_iter().zip(phrases).collect();
            assert_eq!(got, want, "{caption}");
        }
    }
}

fn mean_abs_dev(x: &Array2<f64>, dims: &[usize]) -> f64 {
    let mut total = 0.0;
    for &d in dims {
        let col = x.slice(s![.., d]);
        let m = col.mean().unwrap();
        total += col.iter().map(|v| (v - m).abs()).sum::<f64>() / col.len() as f64;
    }
    total / dims.len() as f64
}

#[test]
fn active_part_dominates_deviation() {
    let layout = PoseLayout::canonical();
    let sk = canonical_skeleton();
    let rec = synth_motion(&wave_left_arm(), 3).unwrap();
    let x = rec.motion.frames().clone();
    let active: Vec<usize> = part_mask([BodyPart::LeftArm], &layout, &sk).unwrap().selected().collect();
    let active_mad = mean_abs_dev(&x, &active);
    for limb in [BodyPart::RightArm, BodyPart::LeftLeg, BodyPart::RightLeg] {
        let dims: Vec<usize> = part_mask([limb], &layout, &sk).unwrap().selected().collect();
        let other = mean_abs_dev(&x, &dims);
        assert!(active_mad >= 10.0 * other, "{limb}: {active_mad} vs {other}");
    }
}

#[test]
fn none_recipes_and_determinism() {
    for r in [stand(), walk_in_place()] {
        let rec = synth_motion(&r, 1).unwrap();
        assert!(rec.spec.is_none());
        assert_eq!(rec, synth_motion(&r, 1).unwrap());
    }
    assert_ne!(synth_motion(&wave_left_arm(), 1).unwrap(), synth_motion(&wave_left_arm(), 2).unwrap());
}

#[test]
fn velocities_match_position_differences() {
    let layout = PoseLayout::canonical();
    let rec = synth_motion(&recipe_by_name("kick-left-leg").unwrap(), 9).unwrap();
    let x = rec.motion.frames();
    let t_len = x.nrows();
    for j in 1..layout.num_joints() {
        let p = layout.position_dims(j).unwrap();
        let v = layout.velocity_dims(j).unwrap();
        for t in 0..t_len - 1 {
            for a in 0..3 {
                let fd = x[[t + 1, p.start + a]] - x[[t, p.start + a]];
                assert!((x[[t, v.start + a]] - fd).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn ground_truth_part_energy_is_perfect() {
    let sk = canonical_skeleton();
    let records = synth_dataset(&default_recipes(), 10, 4).unwrap();
    let (motions, parts): (Vec<_>, Vec<_>) = records
        .iter()
        .filter(|r| !r.spec.is_none())
        .map(|r| (to_joint_positions(&r.motion).unwrap(), r.spec.pairs()[0].part))
        .unzip();
    assert_eq!(part_energy_accuracy(&motions, &parts, &sk).unwrap(), 1.0);
}

#[test]
fn dataset_manifest_round_trip_and_splits() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = build_dataset(&default_recipes(), 30, 11, dir.path()).unwrap();
    assert_eq!(manifest.len(), 180);
    assert_eq!(manifest.iter().filter(|r| r.part == "none").count(), 60);
    let loaded = load_manifest(&dir.path().join("manifest.jsonl")).unwrap();
    assert_eq!(loaded, manifest);
    let items = load_dataset(&dir.path().join("manifest.jsonl")).unwrap();
    let records = synth_dataset(&default_recipes(), 30, 11).unwrap();
    for (item, rec) in items.iter().zip(&records) {
        assert_eq!(item.caption, rec.caption);
        assert_eq!(item.spec, rec.spec);
        assert_eq!(item.motion.frames(), rec.motion.frames());
    }
    let train: HashSet<&str> = manifest.iter().filter(|r| r.split == Split::Train).map(|r| r.path.as_str()).collect();
    let test: HashSet<&str> = manifest.iter().filter(|r| r.split == Split::Test).map(|r| r.path.as_str()).collect();
    assert!(train.is_disjoint(&test));
    assert_eq!(train.len() + test.len(), 180);
    assert_eq!(test.len(), 30);
}
