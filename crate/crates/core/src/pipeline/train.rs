//! Training loops for the two stages and the unconditional baseline.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{OptimizerKind, PipelineConfig};
use super::generate::{stage1_generate, Sampler};
use super::model::{Conditioner, Stage2Params};
use crate::denoiser::{
    adam_step, sgd_step, stage1_loss, stage2_loss, AdamState, ConditionBundle, DenoiseExample, DenoiserParams,
    DropFlags, LossOutput, ParamSet,
};
use crate::diffusion::{forward_sample, rng_stream, DiffusionSchedule};
use crate::error::{Error, Result};
use crate::gcn::GcnParams;
use crate::motion::PartMask;
use crate::synth::DatasetItem;

enum Optimizer {
    Sgd,
    Adam(AdamState),
}

impl Optimizer {
    fn new<P: ParamSet>(kind: OptimizerKind, params: &P) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new(params)),
        }
    }

    fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P, lr: f64) -> Result<()> {
        match self {
            Optimizer::Sgd => sgd_step(params, grads, lr),
            Optimizer::Adam(state) => adam_step(state, params, grads, lr),
        }
    }
}

fn add_into<P: ParamSet>(acc: &mut P, other: &P) {
    for (a, b) in acc.tensors_mut().into_iter().zip(other.tensors()) {
        for (x, y) in a.data.iter_mut().zip(b.data) {
            *x += y;
        }
    }
}

fn noisy<R: Rng>(
    x0: &Array2<f64>,
    conds: ConditionBundle,
    schedule: &DiffusionSchedule,
    dropout: f64,
    rng: &mut R,
) -> Result<DenoiseExample> {
    let t = rng.gen_range(1..=schedule.steps());
    let x_t = forward_sample(x0, t, schedule, rng)?;
    let conds = if dropout > 0.0 && rng.gen_bool(dropout) { conds.with_drop(DropFlags::ALL) } else { conds };
    Ok(DenoiseExample { x0: x0.clone(), x_t, t, conds, weights: None })
}

fn draw(rng: &mut ChaCha8Rng, pool: &[usize], batch: usize) -> Vec<usize> {
    (0..batch).map(|_| pool[rng.gen_range(0..pool.len())]).collect()
}

/// Per-step information handed to training observers.
pub struct StepReport<'a> {
    pub step: usize,
    pub loss: f64,
    pub output: &'a LossOutput,
    pub masks: &'a [PartMask],
}

/// Stage 1 on interactive items: random step, noised motion, conditions
/// dropped jointly with the configured probability, loss on mask dims.
pub fn train_stage1(items: &[DatasetItem], config: &PipelineConfig) -> Result<(DenoiserParams, Vec<f64>)> {
    let mut params = DenoiserParams::init(&config.denoiser_config(false), &mut rng_stream(config.seed, 11))?;
    let losses = continue_stage1(&mut params, items, config)?;
    Ok((params, losses))
}

pub fn continue_stage1(params: &mut DenoiserParams, items: &[DatasetItem], config: &PipelineConfig) -> Result<Vec<f64>> {
    let cond = Conditioner::new(config);
    let schedule = config.schedule()?;
    let pool: Vec<usize> = (0..items.len()).filter(|&i| !items[i].spec.is_none()).collect();
    if pool.is_empty() {
        return Err(Error::EmptyDataset("stage 1 needs interactive items".into()));
    }
    let prepared: Vec<(PartMask, ConditionBundle)> = items
        .iter()
        .map(|it| {
            let m = cond.mask(&it.spec)?;
            let c = cond.stage1_conditions(&it.caption, &it.spec, &m);
            Ok((m, c))
        })
        .collect::<Result<_>>()?;
    let tc = &config.train;
    let mut rng = rng_stream(config.seed, 12);
    let mut opt = Optimizer::new(tc.optimizer, params);
    let mut losses = Vec::with_capacity(tc.steps);
    for _ in 0..tc.steps {
        let batch = draw(&mut rng, &pool, tc.batch_size)
            .into_iter()
            .map(|i| {
                let (m, c) = &prepared[i];
                let mut ex = noisy(items[i].motion.frames(), c.clone(), &schedule, tc.cond_dropout, &mut rng)?;
                ex.weights = Some(ndarray::Array1::from(m.to_f64()));
                Ok(ex)
            })
            .collect::<Result<Vec<_>>>()?;
        let out = stage1_loss(params, &batch)?;
        check_loss(out.loss)?;
        losses.push(out.loss);
        opt.step(params, &out.grads, tc.lr)?;
    }
    Ok(losses)
}

fn check_loss(loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("training loss".into()))
    }
}

/// Stage 2 on all items with the graph network trained jointly. Items
/// without interaction use an empty mask and no spatial feature.
/// `stage1` supplies interactive motion when teacher forcing is off.
pub fn train_stage2(
    items: &[DatasetItem],
    config: &PipelineConfig,
    stage1: Option<&DenoiserParams>,
) -> Result<(Stage2Params, Vec<f64>)> {
    let mut rng = rng_stream(config.seed, 21);
    let cond = Conditioner::new(config);
    let mut params = Stage2Params {
        denoiser: DenoiserParams::init(&config.denoiser_config(true), &mut rng)?,
        gcn: GcnParams::init(&config.gcn_config(&cond.layout), &mut rng)?,
    };
    let losses = continue_stage2(&mut params, items, config, stage1, false, &mut |_| {})?;
    Ok((params, losses))
}

/// Stage-2-shaped model trained with every condition dropped.
pub fn train_baseline(items: &[DatasetItem], config: &PipelineConfig) -> Result<(Stage2Params, Vec<f64>)> {
    let mut rng = rng_stream(config.seed, 31);
    let cond = Conditioner::new(config);
    let mut params = Stage2Params {
        denoiser: DenoiserParams::init(&config.denoiser_config(true), &mut rng)?,
        gcn: GcnParams::init(&config.gcn_config(&cond.layout), &mut rng)?,
    };
    let losses = continue_stage2(&mut params, items, config, None, true, &mut |_| {})?;
    Ok((params, losses))
}

pub fn continue_stage2(
    params: &mut Stage2Params,
    items: &[DatasetItem],
    config: &PipelineConfig,
    stage1: Option<&DenoiserParams>,
    unconditional: bool,
    observer: &mut dyn FnMut(&StepReport<'_>),
) -> Result<Vec<f64>> {
    if items.is_empty() {
        return Err(Error::EmptyDataset("stage 2 needs items".into()));
    }
    let tc = &config.train;
    if !tc.teacher_forcing && stage1.is_none() && !unconditional {
        return Err(Error::InvalidArgument("stage 2 without teacher forcing needs stage-1 parameters".into()));
    }
    let cond = Conditioner::new(config);
    let schedule = config.schedule()?;
    let pool: Vec<usize> = (0..items.len()).collect();
    let empty = PartMask::from_bits(vec![false; cond.pose_dim()]);
    let masks: Vec<PartMask> = if unconditional {
        vec![empty.clone(); items.len()]
    } else {
        items.iter().map(|it| cond.mask(&it.spec)).collect::<Result<_>>()?
    };
    let dropout = if unconditional { 1.0 } else { tc.cond_dropout };
    let mut rng = rng_stream(config.seed, if unconditional { 32 } else { 22 });
    let mut opt = Optimizer::new(tc.optimizer, params);
    let mut losses = Vec::with_capacity(tc.steps);
    for step in 0..tc.steps {
        let idx = draw(&mut rng, &pool, tc.batch_size);
        let mut batch = Vec::with_capacity(idx.len());
        let mut x_inter = Vec::with_capacity(idx.len());
        let mut batch_masks = Vec::with_capacity(idx.len());
        let mut caches = Vec::with_capacity(idx.len());
        for &i in &idx {
            let it = &items[i];
            let m = &masks[i];
            let x0 = it.motion.frames();
            let inter = if m.popcount() == 0 || tc.teacher_forcing || unconditional {
                x0.clone()
            } else {
                let sampler = Sampler {
                    schedule: &schedule,
                    frames: x0.nrows(),
                    guidance_scale: config.sample.guidance_scale,
                    stochastic: config.sample.stochastic,
                };
                let s1 = stage1.expect("checked above");
                stage1_generate(&cond, s1, &it.caption, &it.spec, &sampler, rng.gen(), &mut Vec::new())?
            };
            let (spatial, cache) = if m.popcount() > 0 {
                let (s, c) = cond.spatial_feature(&params.gcn, inter.view(), m)?;
                (Some(s), Some(c))
            } else {
                (None, None)
            };
            let c = cond.stage2_conditions(&it.caption, &it.spec, m, spatial);
            batch.push(noisy(x0, c, &schedule, dropout, &mut rng)?);
            x_inter.push(inter);
            batch_masks.push(m.clone());
            caches.push(cache);
        }
        let out = stage2_loss(&params.denoiser, &batch, &x_inter, &batch_masks)?;
        check_loss(out.loss)?;
        let mut grads = Stage2Params { denoiser: out.grads.clone(), gcn: params.gcn.zeros_like() };
        for (ds, cache) in out.d_spatial.iter().zip(&caches) {
            if let (Some(ds), Some(cache)) = (ds, cache) {
                let g = params.gcn.backward(&cond.adjacency, cache, ds.view())?;
                add_into(&mut grads.gcn, &g);
            }
        }
        observer(&StepReport { step, loss: out.loss, output: &out, masks: &batch_masks });
        losses.push(out.loss);
        opt.step(params, &grads, tc.lr)?;
    }
    Ok(losses)
}

/// Stage 1, stage 2 and, when configured, the baseline.
pub fn train_all(items: &[DatasetItem], config: &PipelineConfig) -> Result<(super::ModelBundle, TrainingLog)> {
    let train: Vec<DatasetItem> = items.iter().filter(|i| i.split == crate::synth::Split::Train).cloned().collect();
    let (stage1, stage1_losses) = train_stage1(&train, config)?;
    let (stage2, stage2_losses) = train_stage2(&train, config, Some(&stage1))?;
    let (baseline, baseline_losses) = if config.train.baseline {
        let (b, l) = train_baseline(&train, config)?;
        (Some(b), l)
    } else {
        (None, Vec::new())
    };
    Ok((
        super::ModelBundle { config: config.clone(), stage1, stage2, baseline },
        TrainingLog { stage1: stage1_losses, stage2: stage2_losses, baseline: baseline_losses },
    ))
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainingLog {
    pub stage1: Vec<f64>,
    pub stage2: Vec<f64>,
    pub baseline: Vec<f64>,
}
