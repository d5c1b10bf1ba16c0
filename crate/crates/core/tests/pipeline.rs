use partmotion::diffusion::rng_stream;
use partmotion::motion::BodyPart;
use partmotion::pipeline::{
    train_all, train_stage1, train_stage2, FallbackExtractor, GenerationRequest, ModelBundle, OptimizerKind,
    PipelineConfig, SpecExtractor,
};
use partmotion::semantics::{Extraction, InteractionPair, InteractionSpec};
use partmotion::synth::{default_recipes, synth_items};
use partmotion::Error;

struct Fixed(InteractionSpec);

impl SpecExtractor for Fixed {
    fn extract(&self, _: &str) -> Extraction {
        Extraction { spec: self.0.clone(), transcripts: Vec::new() }
    }
}

fn tiny() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.seed = 5;
    cfg.schedule.steps = 4;
    cfg.model.width = 16;
    cfg.model.depth = 1;
    cfg.model.embed_dim = 8;
    cfg.model.text_dim = 16;
    cfg.model.cond_dim = 8;
    cfg.gcn.hidden = 4;
    cfg.train.steps = 3;
    cfg.train.batch_size = 4;
    cfg.sample.frames = 6;
    cfg
}

fn bundle() -> ModelBundle {
    ModelBundle::init(&tiny(), &mut rng_stream(1, 0)).unwrap()
}

const WAVE: &str = "a person waves the left hand";

#[test]
fn none_spec_skips_stage_one_and_the_graph() {
    let b = bundle();
    let trace = b.generate(&GenerationRequest::new("a person stands still", 3, 6), &Fixed(InteractionSpec::none("a person stands still"))).unwrap();
    assert!(trace.stage1.is_none());
    assert!(trace.spatial.is_none());
    assert_eq!(trace.mask.popcount(), 0);
    assert_eq!(trace.motion.dim(), (6, 263));
    assert!(trace.steps.iter().all(|s| s.stage == 2));
    assert_eq!(trace.steps.len(), 4);
}

#[test]
fn interactive_spec_runs_both_stages() {
    let b = bundle();
    let trace = b.generate(&GenerationRequest::new(WAVE, 3, 6), &FallbackExtractor).unwrap();
    assert_eq!(trace.spec.parts().into_iter().collect::<Vec<_>>(), vec![BodyPart::LeftArm]);
    assert_eq!(trace.mask.popcount(), 48);
    assert!(trace.stage1.is_some() && trace.spatial.is_some());
    assert_eq!(trace.steps.iter().filter(|s| s.stage == 1).count(), 4);
    assert_eq!(trace.steps.iter().filter(|s| s.stage == 2).count(), 4);
    let mut single = GenerationRequest::new(WAVE, 3, 6);
    single.two_stage = false;
    let trace = b.generate(&single, &FallbackExtractor).unwrap();
    assert!(trace.stage1.is_none());
    assert_eq!(trace.mask.popcount(), 0);
}

#[test]
fn generation_is_deterministic_per_seed() {
    let b = bundle();
    let run = |seed| b.generate(&GenerationRequest::new(WAVE, seed, 6).with_guidance(2.5), &FallbackExtractor).unwrap();
    assert_eq!(run(9).motion, run(9).motion);
    assert_ne!(run(9).motion, run(10).motion);
    let det = |seed| {
        b.generate(&GenerationRequest::new(WAVE, seed, 6).deterministic(), &FallbackExtractor)
            .unwrap()
            .motion
    };
    assert_eq!(det(1), det(1));
}

#[test]
fn all_parts_mask_returns_stage_one_output() {
    let pairs = BodyPart::ALL
        .iter()
        .map(|&p| InteractionPair { part: p, phrase: "moves".into() })
        .collect();
    let spec = InteractionSpec::new("a person moves", pairs);
    let b = bundle();
    let trace = b.generate(&GenerationRequest::new("a person moves", 4, 5), &Fixed(spec)).unwrap();
    assert_eq!(trace.mask.popcount(), 263);
    assert_eq!(Some(&trace.motion), trace.stage1.as_ref());
}

#[test]
fn zero_learning_rate_leaves_parameters_at_init() {
    let items = synth_items(&default_recipes(), 2, 0).unwrap();
    for optimizer in [OptimizerKind::Sgd, OptimizerKind::Adam] {
        let mut cfg = tiny();
        cfg.train.optimizer = optimizer;
        let mut frozen = cfg.clone();
        frozen.train.steps = 0;
        cfg.train.lr = 0.0;
        let (s1, losses) = train_stage1(&items, &cfg).unwrap();
        assert_eq!(losses.len(), 3);
        assert!(losses.iter().all(|l| l.is_finite() && *l > 0.0));
        assert_eq!(s1, train_stage1(&items, &frozen).unwrap().0);
        let (s2, _) = train_stage2(&items, &cfg, None).unwrap();
        assert_eq!(s2, train_stage2(&items, &frozen, None).unwrap().0);
    }
}

#[test]
fn training_is_reproducible_and_checkpoints_round_trip() {
    let items = synth_items(&default_recipes(), 3, 1).unwrap();
    let (a, log_a) = train_all(&items, &tiny()).unwrap();
    let (b, log_b) = train_all(&items, &tiny()).unwrap();
    assert_eq!(a, b);
    assert_eq!(log_a, log_b);
    assert_eq!(log_a.stage1.len(), 3);
    assert!(a.baseline.is_some());

    let dir = tempfile::tempdir().unwrap();
    a.save(dir.path()).unwrap();
    let loaded = ModelBundle::load(dir.path()).unwrap();
    assert_eq!(loaded, a);
    let req = GenerationRequest::new(WAVE, 2, 6).with_guidance(2.0);
    assert_eq!(loaded.generate(&req, &FallbackExtractor).unwrap().motion, a.generate(&req, &FallbackExtractor).unwrap().motion);
    assert_eq!(loaded.generate_baseline(6, 2).unwrap(), a.generate_baseline(6, 2).unwrap());
}

#[test]
fn loading_rejects_missing_and_corrupt_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(ModelBundle::load(dir.path()), Err(Error::Data { .. })));
    bundle().save(dir.path()).unwrap();
    let stage2 = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.to_string_lossy().contains("stage2"))
        .unwrap();
    std::fs::write(&stage2, "{ not json").unwrap();
    assert!(ModelBundle::load(dir.path()).is_err());
}

#[test]
fn config_toml_round_trip_and_validation() {
    let cfg = tiny();
    assert_eq!(PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    let partial = PipelineConfig::from_toml_str("seed = 4\n[train]\nsteps = 7\n").unwrap();
    assert_eq!(partial.train.steps, 7);
    assert_eq!(partial.sample.guidance_scale, 2.5);
    for bad in [
        "[train]\nlr = -1.0\n",
        "[train]\ncond_dropout = 1.5\n",
        "[train]\nbatch_size = 0\n",
        "[schedule]\nsteps = 0\n",
        "[schedule]\nbeta_end = 2.0\n",
        "[sample]\nframes = 0\n",
        "unknown = 1\n",
        "[model]\nwidth = \"wide\"\n",
    ] {
        assert!(matches!(PipelineConfig::from_toml_str(bad), Err(Error::Config(_))), "{bad}");
    }
}

#[test]
fn baseline_is_required_for_baseline_sampling() {
    assert!(matches!(bundle().generate_baseline(4, 0), Err(Error::InvalidArgument(_))));
}
