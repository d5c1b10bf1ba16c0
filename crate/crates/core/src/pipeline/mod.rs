//! Two-stage generation and training.

mod config;
mod generate;
mod model;
mod train;

pub use config::{GraphConfig, ModelConfig, OptimizerKind, PipelineConfig, SampleConfig, ScheduleConfig, TrainConfig};
pub use generate::{
    generate, stage1_generate, stage2_generate, unconditional_generate, FallbackExtractor, GenerationRequest,
    GenerationTrace, LlmExtractor, Sampler, SpecExtractor, StepDiagnostic,
};
pub use model::{
    masked_motion, Conditioner, ModelBundle, Stage2Params, BASELINE_FILE, BASELINE_KIND, CONFIG_FILE, STAGE1_FILE,
    STAGE1_KIND, STAGE2_FILE, STAGE2_KIND,
};
pub use train::{
    continue_stage1, continue_stage2, train_all, train_baseline, train_stage1, train_stage2, StepReport, TrainingLog,
};
