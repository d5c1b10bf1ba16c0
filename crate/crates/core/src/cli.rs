//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::eval::{evaluate_bundle, score_motions, EvalConfig};
use crate::metrics::to_joint_positions;
use crate::motion::{MotionSequence, PoseLayout};
use crate::pipeline::{
    train_all, Conditioner, FallbackExtractor, GenerationRequest, LlmExtractor, ModelBundle, PipelineConfig, SpecExtractor,
};
use crate::semantics::{
    extract_with_retry, fallback_rule_extractor, load_transcripts, save_transcripts, ChatConfig, Extraction,
    HttpChatClient, LlmClient, ScriptedClient, Verdict,
};
use crate::synth::{build_dataset, default_recipes, load_dataset, load_manifest, recipe_by_name, Split, DEFAULT_FPS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SERVICE: i32 = 3;

pub const TRAINING_LOG_FILE: &str = "training_log.json";

#[derive(Debug, Parser)]
#[command(name = "partmotion", version, about = "Part-aware text-to-motion synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract interaction pairs from descriptions.
    Extract(ExtractArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Train both stages and the baseline.
    Train(TrainArgs),
    /// Generate one motion from a description.
    Sample(SampleArgs),
    /// Score a checkpoint on the held-out split.
    Eval(EvalArgs),
    /// Write per-frame joint positions as JSON lines.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClientKind {
    Fallback,
    Fixture,
    Http,
}

#[derive(Debug, Args)]
struct ClientArgs {
    #[arg(long, value_enum, default_value = "fallback")]
    client: ClientKind,
    /// Recorded transcripts (JSON lines) replayed by the fixture client.
    #[arg(long)]
    fixture: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    api_key_env: Option<String>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    text: Option<String>,
    /// Extract every caption of a dataset manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    client: ClientArgs,
    #[arg(long)]
    transcripts_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Records per recipe.
    #[arg(long, default_value_t = 30)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    frames: Option<usize>,
    /// Comma-separated recipe names; combos join names with '+'.
    #[arg(long, value_delimiter = ',')]
    recipes: Vec<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset manifest; overrides the config's dataset.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Checkpoint directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    cond_dropout: Option<f64>,
    #[arg(long)]
    t_steps: Option<usize>,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_end: Option<f64>,
    #[arg(long)]
    guidance_scale: Option<f64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    no_baseline: bool,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    text: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    guidance_scale: Option<f64>,
    /// Posterior mean only, no sampling noise.
    #[arg(long)]
    deterministic: bool,
    /// Skip stage 1 and sample the whole body in one pass.
    #[arg(long)]
    single_stage: bool,
    #[command(flatten)]
    client: ClientArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Required unless --ground-truth is given.
    #[arg(long, required_unless_present = "ground_truth")]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    pool_size: Option<usize>,
    /// Score the reference motions against themselves.
    #[arg(long)]
    ground_truth: bool,
    #[command(flatten)]
    client: ClientArgs,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    motion: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Service(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Runs the command line given by `args` (program name first).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Extract(a) => cmd_extract(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Export(a) => cmd_export(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Service(m) => (EXIT_SERVICE, m),
                Failure::Lib(e @ Error::Transport(_)) => (EXIT_SERVICE, e.to_string()),
                Failure::Lib(e @ Error::InvalidArgument(_)) => (EXIT_USAGE, e.to_string()),
                Failure::Lib(e) => (EXIT_DATA, e.to_string()),
            };
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult {
    writeln!(out, "{text}").map_err(|e| Failure::Lib(Error::io("<stdout>", e)))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Failure::Lib(Error::io(path, e)))
}

/// The language model client chosen on the command line, if any.
fn make_client(args: &ClientArgs) -> CliResult<Option<Box<dyn LlmClient>>> {
    match args.client {
        ClientKind::Fallback => Ok(None),
        ClientKind::Fixture => {
            let path = args
                .fixture
                .as_ref()
                .ok_or_else(|| Failure::Usage("--client fixture needs --fixture".into()))?;
            Ok(Some(Box::new(ScriptedClient::from_transcripts(&load_transcripts(path)?))))
        }
        ClientKind::Http => {
            let mut cfg = ChatConfig::default();
            if let Some(e) = &args.endpoint {
                cfg.endpoint = e.clone();
            }
            if let Some(m) = &args.model {
                cfg.model = m.clone();
            }
            if let Some(k) = &args.api_key_env {
                cfg.api_key_env = k.clone();
            }
            let client = HttpChatClient::from_env(cfg).map_err(|e| Failure::Service(e.to_string()))?;
            Ok(Some(Box::new(client)))
        }
    }
}

fn extractor(client: &Option<Box<dyn LlmClient>>) -> Box<dyn SpecExtractor + '_> {
    match client {
        Some(c) => Box::new(LlmExtractor { client: c.as_ref() }),
        None => Box::new(FallbackExtractor),
    }
}

#[derive(Serialize)]
struct ExtractReport<'a> {
    text: &'a str,
    parts: Vec<&'static str>,
    response: String,
    verdicts: Vec<Verdict>,
}

fn cmd_extract(args: ExtractArgs, out: &mut dyn Write) -> CliResult {
    let sentences: Vec<String> = match (&args.text, &args.manifest) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(m)) => load_manifest(m)?.into_iter().map(|r| r.caption).collect(),
        (None, None) => return Err(Failure::Usage("give --text or --manifest".into())),
    };
    let client = make_client(&args.client)?;
    let mut transcripts = Vec::new();
    let mut unreachable = 0;
    for sentence in &sentences {
        let ex = match &client {
            Some(c) => extract_with_retry(sentence, c.as_ref()),
            None => Extraction { spec: fallback_rule_extractor(sentence), transcripts: Vec::new() },
        };
        if !ex.transcripts.is_empty() && ex.transcripts.iter().all(|t| t.verdict == Verdict::TransportFailed) {
            unreachable += 1;
        }
        let parts = if ex.spec.is_none() { vec!["none"] } else { ex.spec.parts().iter().map(|p| p.name()).collect() };
        let report = ExtractReport {
            text: sentence,
            parts,
            response: ex.spec.to_response(),
            verdicts: ex.transcripts.iter().map(|t| t.verdict).collect(),
        };
        write_out(out, &serde_json::to_string(&report).expect("report serializes"))?;
        transcripts.extend(ex.transcripts);
    }
    if let Some(path) = &args.transcripts_out {
        save_transcripts(path, &transcripts)?;
    }
    if unreachable > 0 {
        return Err(Failure::Service(format!("language model unreachable for {unreachable} sentence(s)")));
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, out: &mut dyn Write) -> CliResult {
    let mut recipes = if args.recipes.is_empty() {
        default_recipes()
    } else {
        args.recipes
            .iter()
            .map(|n| recipe_by_name(n.trim()).ok_or_else(|| Failure::Usage(format!("unknown recipe {n:?}"))))
            .collect::<CliResult<Vec<_>>>()?
    };
    if let Some(f) = args.frames {
        recipes = recipes.into_iter().map(|r| r.with_frames(f)).collect();
    }
    let records = build_dataset(&recipes, args.count, args.seed, &args.out)?;
    let test = records.iter().filter(|r| r.split == Split::Test).count();
    write_out(out, &format!("wrote {} records ({} test) to {}", records.len(), test, args.out.display()))
}

fn train_config(args: &TrainArgs) -> CliResult<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(d) = &args.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.steps {
        cfg.train.steps = v;
    }
    if let Some(v) = args.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = args.lr {
        cfg.train.lr = v;
    }
    if let Some(v) = args.cond_dropout {
        cfg.train.cond_dropout = v;
    }
    if let Some(v) = args.t_steps {
        cfg.schedule.steps = v;
    }
    if let Some(v) = args.beta_start {
        cfg.schedule.beta_start = v;
    }
    if let Some(v) = args.beta_end {
        cfg.schedule.beta_end = v;
    }
    if let Some(v) = args.guidance_scale {
        cfg.sample.guidance_scale = v;
    }
    if let Some(v) = args.width {
        cfg.model.width = v;
    }
    if let Some(v) = args.depth {
        cfg.model.depth = v;
    }
    if args.no_baseline {
        cfg.train.baseline = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn last(v: &[f64]) -> f64 {
    v.last().copied().unwrap_or(f64::NAN)
}

fn cmd_train(args: TrainArgs, out: &mut dyn Write) -> CliResult {
    let cfg = train_config(&args)?;
    let manifest = cfg
        .dataset
        .clone()
        .ok_or_else(|| Failure::Usage("no dataset: pass --dataset or set dataset in the config".into()))?;
    let items = load_dataset(&manifest)?;
    let (bundle, log) = train_all(&items, &cfg)?;
    bundle.save(&args.out)?;
    write_file(&args.out.join(TRAINING_LOG_FILE), &serde_json::to_string(&log).expect("log serializes"))?;
    write_out(
        out,
        &format!(
            "trained {} steps; final loss stage1 {:.5} stage2 {:.5} baseline {:.5}; saved to {}",
            cfg.train.steps,
            last(&log.stage1),
            last(&log.stage2),
            last(&log.baseline),
            args.out.display()
        ),
    )
}

fn cmd_sample(args: SampleArgs, out: &mut dyn Write) -> CliResult {
    let bundle = ModelBundle::load(&args.checkpoint)?;
    let client = make_client(&args.client)?;
    let frames = args.frames.unwrap_or(bundle.config.sample.frames);
    let mut request = GenerationRequest::new(&args.text, args.seed, frames)
        .with_guidance(args.guidance_scale.unwrap_or(bundle.config.sample.guidance_scale));
    request.stochastic = bundle.config.sample.stochastic;
    if args.deterministic {
        request = request.deterministic();
    }
    request.two_stage = !args.single_stage;
    let ex = extractor(&client);
    let trace = bundle.generate(&request, ex.as_ref())?;
    let motion = MotionSequence::new(trace.motion.clone(), PoseLayout::canonical(), DEFAULT_FPS)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    motion.save(&args.out)?;
    if let Some(path) = &args.trace {
        write_file(path, &trace.to_json())?;
    }
    let parts: Vec<&str> = trace.mask.parts().iter().map(|p| p.name()).collect();
    let parts = if parts.is_empty() { "none".to_string() } else { parts.join(", ") };
    write_out(out, &format!("sampled {frames} frames (parts: {parts}) to {}", args.out.display()))
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> CliResult {
    let items = load_dataset(&args.dataset)?;
    let mut cfg = EvalConfig { seed: args.seed, ..EvalConfig::default() };
    if let Some(p) = args.pool_size {
        cfg.pool_size = p;
    }
    let report = if args.ground_truth {
        let test: Vec<_> = items.iter().filter(|i| i.split == Split::Test).cloned().collect();
        let train: Vec<_> = items.iter().filter(|i| i.split == Split::Train).cloned().collect();
        if test.is_empty() || train.is_empty() {
            return Err(Error::EmptyDataset("evaluation needs train and test items".into()).into());
        }
        let generated: Vec<_> = test.iter().map(|i| i.motion.frames().clone()).collect();
        let encoder = Conditioner::new(&PipelineConfig::default()).encoder;
        score_motions(&generated, &test, &train, &encoder, &cfg)?
    } else {
        let path = args.checkpoint.as_ref().expect("clap requires checkpoint");
        let bundle = ModelBundle::load(path)?;
        let client = make_client(&args.client)?;
        let ex = extractor(&client);
        evaluate_bundle(&bundle, &items, ex.as_ref(), &cfg)?.0
    };
    if let Some(path) = &args.out {
        report.save(path)?;
    }
    write_out(out, &report.to_json())
}

#[derive(Serialize)]
struct FrameRecord {
    frame: usize,
    joints: Vec<[f64; 3]>,
}

fn cmd_export(args: ExportArgs, out: &mut dyn Write) -> CliResult {
    let motion = MotionSequence::load(&args.motion)?;
    let joints = to_joint_positions(&motion)?;
    let view = joints.view();
    let mut text = String::new();
    for t in 0..joints.num_frames() {
        let rec = FrameRecord {
            frame: t,
            joints: (0..joints.num_joints()).map(|j| [view[[t, j, 0]], view[[t, j, 1]], view[[t, j, 2]]]).collect(),
        };
        text.push_str(&serde_json::to_string(&rec).expect("frame serializes"));
        text.push('\n');
    }
    write_file(&args.out, &text)?;
    write_out(out, &format!("exported {} frames to {}", joints.num_frames(), args.out.display()))
}
