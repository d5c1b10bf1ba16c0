use ndarray::{Array2, Array3};
use partmotion::diffusion::rng_stream;
use partmotion::metrics::{foot_jpe, hand_jpe, mm_dist, mpjpe, mpvpe, r_precision_top3};
use partmotion::motion::{gather_masked, BodyPart};
use partmotion::pipeline::{generate, GenerationRequest, ModelBundle, PipelineConfig, SpecExtractor};
use partmotion::semantics::{Extraction, InteractionPair, InteractionSpec};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::{common, Outcome};

struct Fixed(InteractionSpec);

impl SpecExtractor for Fixed {
    fn extract(&self, _: &str) -> Extraction {
        Extraction { spec: self.0.clone(), transcripts: Vec::new() }
    }
}

const SENTENCE: &str = "uses the left arm, the right arm, the left leg, the right leg, the torso and the pelvis";

fn random_spec(rng: &mut impl Rng) -> InteractionSpec {
    let mut parts = BodyPart::ALL.to_vec();
    parts.shuffle(rng);
    let k = rng.gen_range(1..=parts.len());
    let pairs = parts[..k]
        .iter()
        .map(|&p| InteractionPair { part: p, phrase: format!("the {}", p.name()) })
        .collect();
    InteractionSpec::new(SENTENCE, pairs)
}

fn small_config(rng: &mut impl Rng) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.seed = rng.gen();
    cfg.schedule.steps = rng.gen_range(2..6);
    cfg.model.width = 16;
    cfg.model.depth = 1;
    cfg.model.embed_dim = 8;
    cfg.model.text_dim = 16;
    cfg.model.cond_dim = 8;
    cfg.gcn.hidden = 4;
    cfg
}

pub fn overwrite_guarantee() -> Outcome {
    let mut rng = rng_stream(7, 0);
    let mut mismatched = 0;
    for _ in 0..100 {
        let cfg = small_config(&mut rng);
        let bundle = ModelBundle::init(&cfg, &mut rng).unwrap();
        let spec = random_spec(&mut rng);
        let mut request = GenerationRequest::new(SENTENCE, rng.gen(), rng.gen_range(1..10))
            .with_guidance(rng.gen_range(0.0..4.0));
        request.stochastic = rng.gen_bool(0.5);
        let schedule = cfg.schedule().unwrap();
        let trace = generate(
            &request,
            &Fixed(spec),
            &bundle.conditioner(),
            &bundle.stage1,
            &bundle.stage2.denoiser,
            Some(&bundle.stage2.gcn),
            &schedule,
        )
        .unwrap();
        let inter = trace.stage1.as_ref().expect("interactive spec runs stage 1");
        let a = gather_masked(trace.motion.view(), &trace.mask).unwrap();
        let b = gather_masked(inter.view(), &trace.mask).unwrap();
        let identical = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
        if !identical || trace.mask.popcount() == 0 {
            mismatched += 1;
        }
    }
    Outcome::new(mismatched == 0, format!("100 random pipelines, {mismatched} not bit-identical on the mask"))
}

pub fn semantics_protocol() -> Outcome {
    let cases = common::load_cases();
    let invalid = cases.iter().filter(|c| c.expects_none() && c.attempts == 3).count();
    let failures: Vec<String> = cases.iter().filter_map(|c| common::check_case(c).err()).collect();
    Outcome::new(
        cases.len() >= 30 && failures.is_empty(),
        if failures.is_empty() {
            format!("{} fixtures ({} exhausting three attempts) all as expected", cases.len(), invalid)
        } else {
            format!("{} of {} fixtures wrong: {}", failures.len(), cases.len(), failures.join("; "))
        },
    )
}

pub fn metric_identities() -> Outcome {
    let mut rng = rng_stream(9, 0);
    let mut problems = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            problems.push(what.to_string());
        }
    };
    let a = Array3::from_shape_simple_fn((12, 22, 3), || rng.gen_range(-1.0..1.0));
    check(mpjpe(a.view(), a.view()).unwrap() == 0.0, "mpjpe identity");
    check(mpvpe(a.view(), a.view()).unwrap() == 0.0, "mpvpe identity");
    check(hand_jpe(a.view(), a.view()).unwrap() == 0.0, "hand identity");
    check(foot_jpe(a.view(), a.view()).unwrap() == 0.0, "foot identity");
    let mut shifted = a.clone();
    for mut p in shifted.lanes_mut(ndarray::Axis(2)) {
        p[0] += 3.0;
        p[1] += 4.0;
    }
    let off = mpjpe(shifted.view(), a.view()).unwrap();
    check((off - 5.0).abs() <= 1e-9, "offset mpjpe");
    let b = Array3::from_shape_simple_fn((12, 22, 3), || rng.gen_range(-1.0..1.0));
    let base = mpvpe(a.view(), b.view()).unwrap();
    check((mpvpe(shifted.view(), b.view()).unwrap() - base).abs() <= 1e-12, "mpvpe translation");
    let emb = Array2::from_shape_simple_fn((40, 16), || rng.gen_range(-1.0..1.0));
    check(r_precision_top3(emb.view(), emb.view(), 32, 3).unwrap() == 1.0, "r-precision matched");
    check(mm_dist(emb.view(), emb.view()).unwrap() == 0.0, "mm-dist identity");
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!("identities hold; (3,4,0) offset MPJPE {off:.12}")
        } else {
            format!("failed: {}", problems.join(", "))
        },
    )
}
