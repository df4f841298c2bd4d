//! Batch curation of raw videos into a manifest of camera-motion-annotated,
//! quality-filtered clips with adaptive sampling plans and validated captions.
//!
//! The pipeline runs per source video:
//! decode -> optical flow trace -> cut detection & span extraction ->
//! camera-motion classification -> aesthetic/quality scoring -> retention
//! filter -> sampling plan -> optional captioning -> JSONL manifest record.
//!
//! See the `examples/` directory for one runnable example per capability and
//! the `curate` binary for the batch CLI.

pub mod caption;
pub mod config;
pub mod flow;
pub mod manifest;
pub mod media;
pub mod motion;
pub mod pipeline;
pub mod quality;
pub mod sampler;
pub mod segmenter;
pub mod synth;
pub mod y4m;

mod http;

pub use config::PipelineConfig;
pub use pipeline::{run, RunReport};
