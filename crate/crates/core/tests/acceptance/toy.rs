use std::time::Instant;

use ndarray::{Array1, Array2};
use partmotion::denoiser::{
    adam_step, stage1_loss, AdamState, ConditionBundle, DenoiseExample, DenoiserConfig, DenoiserParams, DropFlags,
    X0Predictor,
};
use partmotion::diffusion::{forward_sample, make_schedule, rng_stream, sample_loop, ScheduleKind};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::Outcome;

const MODES: [f64; 2] = [-1.0, 1.0];
const SPREAD: f64 = 0.15;
const STEPS: usize = 12_000;
const BATCH: usize = 256;
const LR: f64 = 2e-3;
const SAMPLES: usize = 4000;
const BINS: usize = 40;
const RANGE: (f64, f64) = (-2.0, 2.0);

fn draw_data(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let noise = Normal::new(0.0, SPREAD).unwrap();
    (0..n).map(|_| MODES[rng.gen_range(0..2)] + noise.sample(rng)).collect()
}

fn histogram(v: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; BINS];
    let width = (RANGE.1 - RANGE.0) / BINS as f64;
    for &x in v {
        let b = (((x - RANGE.0) / width).floor().max(0.0) as usize).min(BINS - 1);
        h[b] += 1.0;
    }
    h.iter().map(|c| c / v.len() as f64).collect()
}

fn conds() -> ConditionBundle {
    ConditionBundle::new(Array1::zeros(1), Array1::zeros(1), Array1::zeros(1)).with_drop(DropFlags::ALL)
}

/// Every example is a one-frame sequence holding one scalar draw, so the
/// frame-position input stays constant.
pub fn two_mode_toy() -> Outcome {
    let start = Instant::now();
    let schedule = make_schedule(50, 1e-4, 0.2, ScheduleKind::Linear).unwrap();
    let cfg = DenoiserConfig { pose_dim: 1, width: 64, depth: 2, embed_dim: 16, text_dim: 1, cond_dim: 1, steps: 50, spatial: false };
    let mut rng = rng_stream(10, 0);
    let mut params = DenoiserParams::init(&cfg, &mut rng).unwrap();
    let mut adam = AdamState::new(&params);
    for step in 0..STEPS {
        let batch: Vec<DenoiseExample> = draw_data(BATCH, &mut rng)
            .into_iter()
            .map(|v| {
                let x0 = Array2::from_elem((1, 1), v);
                let t = rng.gen_range(1..=50);
                let x_t = forward_sample(&x0, t, &schedule, &mut rng).unwrap();
                DenoiseExample { x0, x_t, t, conds: conds(), weights: None }
            })
            .collect();
        let out = stage1_loss(&params, &batch).unwrap();
        let lr = LR * (1.0 - step as f64 / STEPS as f64);
        adam_step(&mut adam, &mut params, &out.grads, lr).unwrap();
    }
    let c = conds();
    let samples: Vec<f64> = (0..SAMPLES)
        .map(|_| sample_loop((1, 1), &schedule, &mut rng, true, |x, t| params.predict_x0(x.view(), t, &c)).unwrap()[[0, 0]])
        .collect();
    let truth = draw_data(20_000, &mut rng_stream(10, 1));
    let (hs, ht) = (histogram(&samples), histogram(&truth));
    let tv = 0.5 * hs.iter().zip(&ht).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(tv < 0.15 && secs < 180.0, format!("{SAMPLES} samples, total variation {tv:.3}, {secs:.1}s"))
}
