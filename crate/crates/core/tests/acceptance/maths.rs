use std::time::Instant;

use ndarray::{Array1, Array2, Array3};
use partmotion::denoiser::{
    stage2_loss, ConditionBundle, DenoiseExample, DenoiserConfig, DenoiserParams, DropFlags, ParamSet,
};
use partmotion::diffusion::{
    forward_sample, make_schedule, posterior_mean, posterior_mean_with, rng_stream, DiffusionSchedule, MeanForm,
    ScheduleKind,
};
use partmotion::gcn::{AdjacencySubsets, GcnConfig, GcnParams};
use partmotion::motion::PartMask;
use partmotion::pipeline::Stage2Params;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::Outcome;

const DRAWS: usize = 10_000;

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Closed-form q(x_t | x_0) against the one-step chain, mean and variance
/// compared within three standard errors of their difference.
pub fn forward_consistency() -> Outcome {
    let start = Instant::now();
    let schedules = [
        make_schedule(50, 1e-4, 0.2, ScheduleKind::Linear).unwrap(),
        make_schedule(1000, 1e-4, 0.02, ScheduleKind::Linear).unwrap(),
    ];
    let mut rng = rng_stream(1, 0);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for s in &schedules {
        let big = s.steps();
        for (x0, t) in [(1.5, 1), (-0.7, big / 4), (2.0, big / 2), (0.3, big)] {
            let closed = forward_sample(&Array1::from_elem(DRAWS, x0), t, s, &mut rng).unwrap().to_vec();
            let iterated: Vec<f64> = (0..DRAWS)
                .map(|_| {
                    let mut x = x0;
                    for k in 1..=t {
                        let b = s.beta(k);
                        let e: f64 = rng.sample(StandardNormal);
                        x = (1.0 - b).sqrt() * x + b.sqrt() * e;
                    }
                    x
                })
                .collect();
            let (m1, v1) = moments(&closed);
            let (m2, v2) = moments(&iterated);
            let n = DRAWS as f64;
            let se_mean = (v1 / n + v2 / n).sqrt();
            let se_var = ((v1 * v1 + v2 * v2) * 2.0 / (n - 1.0)).sqrt();
            worst = worst.max((m1 - m2).abs() / se_mean).max((v1 - v2).abs() / se_var);
            checks += 2;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst < 3.0 && secs < 10.0,
        format!("{checks} moment checks, worst {worst:.2} standard errors, {secs:.1}s"),
    )
}

/// Posterior mean of q(x_{t-1} | x_t, x_0) computed from the betas alone.
fn oracle_mean(betas: &[f64], t: usize, x0: f64, xt: f64) -> f64 {
    let abar = |k: usize| betas[..k].iter().map(|b| 1.0 - b).product::<f64>();
    let (ab_t, ab_prev, beta) = (abar(t), abar(t - 1), betas[t - 1]);
    ab_prev.sqrt() * beta / (1.0 - ab_t) * x0 + (1.0 - beta).sqrt() * (1.0 - ab_prev) / (1.0 - ab_t) * xt
}

pub fn posterior_oracle() -> Outcome {
    let mut rng = rng_stream(2, 0);
    let mut worst: f64 = 0.0;
    let mut printed_dev: f64 = 0.0;
    for _ in 0..100 {
        let steps = rng.gen_range(1..=200);
        let lo = rng.gen_range(1e-5..1e-2);
        let hi = rng.gen_range(lo..0.5);
        let s: DiffusionSchedule = make_schedule(steps, lo, hi, ScheduleKind::Linear).unwrap();
        let t = rng.gen_range(1..=steps);
        let x0 = Array1::from(vec![rng.gen_range(-3.0..3.0)]);
        let xt = Array1::from(vec![rng.gen_range(-3.0..3.0)]);
        let want = oracle_mean(s.betas(), t, x0[0], xt[0]);
        let got = posterior_mean(&xt, &x0, t, &s).unwrap()[0];
        worst = worst.max((got - want).abs());
        let printed = posterior_mean_with(&xt, &x0, t, &s, MeanForm::Printed).unwrap()[0];
        printed_dev = printed_dev.max((printed - want).abs());
    }
    Outcome::new(
        worst < 1e-6,
        format!("100 cases, max |error| {worst:.2e}; printed-form max deviation {printed_dev:.3} (reported only)"),
    )
}

// Five-point central stencil. Several gradients here are around 1e-8, where
// the two-point formula's cancellation error alone exceeds the tolerance.
const FD_STEP: f64 = 1e-4;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-7)
}

fn random(shape: (usize, usize), rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.gen_range(-1.0..1.0))
}

struct Stage2Problem {
    adj: AdjacencySubsets,
    feats: Vec<Array3<f64>>,
    batch: Vec<DenoiseExample>,
    x_inter: Vec<Array2<f64>>,
    masks: Vec<PartMask>,
}

impl Stage2Problem {
    fn loss(&self, p: &Stage2Params) -> (f64, Stage2Params) {
        let mut batch = self.batch.clone();
        let mut caches = Vec::new();
        for (ex, f) in batch.iter_mut().zip(&self.feats) {
            let (s, c) = p.gcn.forward(f.view(), &self.adj).unwrap();
            ex.conds = ex.conds.clone().with_spatial(s);
            caches.push(c);
        }
        let out = stage2_loss(&p.denoiser, &batch, &self.x_inter, &self.masks).unwrap();
        let mut gcn = p.gcn.zeros_like();
        for (ds, c) in out.d_spatial.iter().zip(&caches) {
            if let Some(ds) = ds {
                let g = p.gcn.backward(&self.adj, c, ds.view()).unwrap();
                for (a, b) in gcn.tensors_mut().into_iter().zip(g.tensors()) {
                    for (x, y) in a.data.iter_mut().zip(b.data) {
                        *x += y;
                    }
                }
            }
        }
        (out.loss, Stage2Params { denoiser: out.grads, gcn })
    }
}

/// Fourth-order central differences on every scalar of a joint denoiser + part-graph
/// configuration, including text, instruction, mask, time and spatial paths.
pub fn gradient_suite() -> Outcome {
    let mut rng = rng_stream(3, 0);
    let dcfg = DenoiserConfig { pose_dim: 7, width: 4, depth: 2, embed_dim: 4, text_dim: 3, cond_dim: 2, steps: 20, spatial: true };
    let gcfg = GcnConfig { num_joints: 4, num_subsets: 4, hidden: 3, gcn_layers: 2, conv_layers: 2, kernel: 3, stride: 2, cond_dim: 2 };
    let params = Stage2Params {
        denoiser: DenoiserParams::init(&dcfg, &mut rng).unwrap(),
        gcn: GcnParams::init(&gcfg, &mut rng).unwrap(),
    };
    let n_params = params.num_params();
    let labels: Vec<String> = (0..4).map(|k| format!("s{k}")).collect();
    let adj = AdjacencySubsets::from_partition(4, &[(0, 1), (1, 2), (0, 3)], &[0, 0, 1, 2], 3, &labels).unwrap();
    let mut batch = Vec::new();
    let mut feats = Vec::new();
    let mut x_inter = Vec::new();
    for i in 0..3 {
        let frames = 3 + i;
        let mut conds = ConditionBundle::new(
            Array1::from_shape_simple_fn(3, || rng.gen_range(-1.0..1.0)),
            Array1::from_shape_simple_fn(7, || rng.gen_range(0..2) as f64),
            Array1::from_shape_simple_fn(3, || rng.gen_range(-1.0..1.0)),
        );
        if i == 2 {
            conds = conds.with_drop(DropFlags { text: true, ..DropFlags::NONE });
        }
        batch.push(DenoiseExample {
            x0: random((frames, 7), &mut rng),
            x_t: random((frames, 7), &mut rng),
            t: rng.gen_range(1..=20),
            conds,
            weights: None,
        });
        feats.push(Array3::from_shape_simple_fn((frames, 4, 9), || rng.gen_range(-1.0..1.0)));
        x_inter.push(random((frames, 7), &mut rng));
    }
    let masks = vec![
        PartMask::from_bits(vec![true, false, false, true, false, true, false]),
        PartMask::from_bits(vec![false, true, true, false, false, false, true]),
        PartMask::from_bits(vec![true, false, true, false, true, false, false]),
    ];
    let problem = Stage2Problem { adj, feats, batch, x_inter, masks };
    let (_, grads) = problem.loss(&params);
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(|t| t.data.to_vec()).collect();
    let names: Vec<String> = params.tensors().into_iter().map(|t| t.name).collect();
    let mut worst = (String::new(), 0.0f64);
    for (k, name) in names.iter().enumerate() {
        for i in 0..analytic[k].len() {
            let at = |h: f64| {
                let mut p = params.clone();
                p.tensors_mut()[k].data[i] += h;
                problem.loss(&p).0
            };
            let h = FD_STEP;
            let numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            let e = rel_err(analytic[k][i], numeric);
            if e > worst.1 {
                worst = (name.clone(), e);
            }
        }
    }
    Outcome::new(
        worst.1 < 1e-4 && n_params <= 500,
        format!("{} tensors, {n_params} parameters, worst relative error {:.1e} ({})", names.len(), worst.1, worst.0),
    )
}

pub fn masked_gradients() -> Outcome {
    let mut rng = rng_stream(4, 0);
    let cfg = DenoiserConfig { pose_dim: 263, width: 16, depth: 1, embed_dim: 8, text_dim: 8, cond_dim: 4, steps: 10, spatial: true };
    let params = DenoiserParams::init(&cfg, &mut rng).unwrap();
    let mut leaked = 0usize;
    let mut checked = 0usize;
    for _ in 0..50 {
        let frames = rng.gen_range(1..6);
        let p: f64 = rng.gen_range(0.05..0.95);
        let mask = PartMask::from_bits((0..263).map(|_| rng.gen_bool(p)).collect());
        let ex = DenoiseExample {
            x0: random((frames, 263), &mut rng),
            x_t: random((frames, 263), &mut rng),
            t: rng.gen_range(1..=10),
            conds: ConditionBundle::new(
                Array1::from_shape_simple_fn(8, || rng.gen_range(-1.0..1.0)),
                Array1::from(mask.to_f64()),
                Array1::from_shape_simple_fn(8, || rng.gen_range(-1.0..1.0)),
            )
            .with_spatial(Array1::from_shape_simple_fn(4, || rng.gen_range(-1.0..1.0))),
            weights: None,
        };
        let inter = random((frames, 263), &mut rng);
        let out = stage2_loss(&params, &[ex], &[inter], &[mask.clone()]).unwrap();
        let d = &out.d_output;
        for row in d.rows() {
            for dim in mask.selected() {
                checked += 1;
                if row[dim] != 0.0 {
                    leaked += 1;
                }
            }
        }
    }
    Outcome::new(leaked == 0, format!("50 masks, {checked} masked entries, {leaked} non-zero"))
}
