//! Scoring a trained bundle on held-out items.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::denoiser::TextEncoder;
use crate::error::{Error, Result};
use crate::metrics::{
    foot_jpe, hand_jpe, joint_subset_jpe, mm_dist, mpjpe, mpvpe, part_energy_accuracy, r_precision_top3,
    to_joint_positions, train_motion_encoder, EncoderTrainConfig, JointPositions, MetricReport, MotionEmbedder,
    DEFAULT_POOL_SIZE,
};
use crate::motion::{canonical_skeleton, MotionSequence};
use crate::pipeline::{GenerationRequest, ModelBundle, SpecExtractor};
use crate::semantics::InteractionSpec;
use crate::synth::{DatasetItem, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub seed: u64,
    pub pool_size: usize,
    pub encoder: EncoderTrainConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { seed: 0, pool_size: DEFAULT_POOL_SIZE, encoder: EncoderTrainConfig::default() }
    }
}

/// Text used for retrieval: the interaction instruction, or the full text
/// when there is none.
pub fn interaction_text(caption: &str, spec: &InteractionSpec) -> String {
    if spec.is_none() {
        caption.to_string()
    } else {
        spec.instruction_text()
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Joint-space and retrieval metrics of `generated` against `reference`,
/// plus part accuracy for interactive items. Retrieval uses an encoder fit on
/// `encoder_items`.
pub fn score_motions(
    generated: &[Array2<f64>],
    reference: &[DatasetItem],
    encoder_items: &[DatasetItem],
    text_encoder: &dyn TextEncoder,
    config: &EvalConfig,
) -> Result<MetricReport> {
    if generated.is_empty() || generated.len() != reference.len() {
        return Err(Error::EmptyDataset(format!("{} generated for {} references", generated.len(), reference.len())));
    }
    let skeleton = canonical_skeleton();
    let mut report = MetricReport::default();
    let (mut pj, mut pv, mut hj, mut fj) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut energy_motions = Vec::new();
    let mut energy_parts = Vec::new();
    let mut part_errors = Vec::new();
    for (g, item) in generated.iter().zip(reference) {
        let gt = to_joint_positions(&item.motion)?;
        let pred = to_joint_positions(&MotionSequence::new(g.clone(), item.motion.layout().clone(), item.motion.fps())?)?;
        pj.push(mpjpe(pred.view(), gt.view())?);
        if gt.num_frames() >= 2 {
            pv.push(mpvpe(pred.view(), gt.view())?);
        }
        hj.push(hand_jpe(pred.view(), gt.view())?);
        fj.push(foot_jpe(pred.view(), gt.view())?);
        if let Some(pair) = item.spec.pairs().first() {
            part_errors.push(masked_part_error(&pred, &gt, &item.spec)?);
            energy_parts.push(pair.part);
            energy_motions.push(pred);
        }
    }
    let n = generated.len();
    report.push("mpjpe", mean(&pj), n, config.seed);
    report.push("mpvpe", mean(&pv), pv.len(), config.seed);
    report.push("hand_jpe", mean(&hj), n, config.seed);
    report.push("foot_jpe", mean(&fj), n, config.seed);
    if !energy_motions.is_empty() {
        report.push("masked_part_mpjpe", mean(&part_errors), part_errors.len(), config.seed);
        let acc = part_energy_accuracy(&energy_motions, &energy_parts, &skeleton)?;
        report.push("part_energy_accuracy", acc, energy_motions.len(), config.seed);
    }

    let texts: Vec<Vec<f64>> = encoder_items
        .iter()
        .map(|i| text_encoder.encode(&interaction_text(&i.caption, &i.spec)).to_vec())
        .collect();
    let text_matrix = to_matrix(&texts)?;
    let train_views: Vec<ArrayView2<'_, f64>> = encoder_items.iter().map(|i| i.motion.frames().view()).collect();
    let enc_cfg = EncoderTrainConfig { seed: config.seed, ..config.encoder.clone() };
    let (encoder, _) = train_motion_encoder(&train_views, text_matrix.view(), &enc_cfg)?;
    let motion_emb: Vec<Vec<f64>> =
        generated.iter().map(|g| encoder.embed(g.view()).map(|e| e.to_vec())).collect::<Result<_>>()?;
    let ref_text: Vec<Vec<f64>> = reference
        .iter()
        .map(|i| text_encoder.encode(&interaction_text(&i.caption, &i.spec)).to_vec())
        .collect();
    let (me, te) = (to_matrix(&motion_emb)?, to_matrix(&ref_text)?);
    let pool = config.pool_size.min(n);
    report.push("r_precision_top3", r_precision_top3(me.view(), te.view(), pool, config.seed)?, n, config.seed);
    report.push("mm_dist", mm_dist(me.view(), te.view())?, n, config.seed);
    Ok(report)
}

/// Position error over the joints of the spec's parts.
pub fn masked_part_error(pred: &JointPositions, gt: &JointPositions, spec: &InteractionSpec) -> Result<f64> {
    let skeleton = canonical_skeleton();
    let mut joints: Vec<usize> = spec.parts().into_iter().flat_map(|p| skeleton.joints_of(p)).collect();
    joints.sort_unstable();
    joints.dedup();
    joint_subset_jpe(pred.view(), gt.view(), &joints)
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let w = rows.first().map_or(0, Vec::len);
    Array2::from_shape_vec((rows.len(), w), rows.concat()).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Generates one motion per held-out item from its caption and scores it.
/// When the bundle has a baseline, its masked-part error is reported as
/// `baseline_masked_part_mpjpe`.
pub fn evaluate_bundle(
    bundle: &ModelBundle,
    items: &[DatasetItem],
    extractor: &dyn SpecExtractor,
    config: &EvalConfig,
) -> Result<(MetricReport, Vec<Array2<f64>>)> {
    let test: Vec<DatasetItem> = items.iter().filter(|i| i.split == Split::Test).cloned().collect();
    let train: Vec<DatasetItem> = items.iter().filter(|i| i.split == Split::Train).cloned().collect();
    if test.is_empty() || train.is_empty() {
        return Err(Error::EmptyDataset("evaluation needs train and test items".into()));
    }
    let mut generated = Vec::with_capacity(test.len());
    for (k, item) in test.iter().enumerate() {
        let mut request = GenerationRequest::new(&item.caption, config.seed.wrapping_add(k as u64), item.motion.num_frames())
            .with_guidance(bundle.config.sample.guidance_scale);
        request.stochastic = bundle.config.sample.stochastic;
        generated.push(bundle.generate(&request, extractor)?.motion);
    }
    let encoder = bundle.conditioner().encoder;
    let mut report = score_motions(&generated, &test, &train, &encoder, config)?;
    if bundle.baseline.is_some() {
        let mut errors = Vec::new();
        for (k, item) in test.iter().enumerate() {
            if item.spec.is_none() {
                continue;
            }
            let frames = item.motion.num_frames();
            let b = bundle.generate_baseline(frames, config.seed.wrapping_add(k as u64))?;
            let pred = to_joint_positions(&MotionSequence::new(b, item.motion.layout().clone(), item.motion.fps())?)?;
            errors.push(masked_part_error(&pred, &to_joint_positions(&item.motion)?, &item.spec)?);
        }
        report.push("baseline_masked_part_mpjpe", mean(&errors), errors.len(), config.seed);
    }
    Ok((report, generated))
}
