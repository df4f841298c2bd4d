//! Pipeline configuration: one TOML file with per-module tables, every
//! key defaulted so an empty file is a valid config.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::caption::CaptionConfig;
use crate::flow::FlowConfig;
use crate::motion::{ClassifierClientConfig, ClassifierConfig};
use crate::quality::{FilterConfig, ScorerClientConfig};
use crate::segmenter::SegmenterConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Unreadable(String, #[source] std::io::Error),
    #[error("invalid config {0}: {1}")]
    Invalid(String, String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StageToggles {
    pub classify: bool,
    pub score: bool,
    pub filter: bool,
    pub sample: bool,
    pub caption: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        // Captioning needs an external service, so it is opt-in.
        StageToggles { classify: true, score: true, filter: true, sample: true, caption: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Newline-delimited list of source paths/URIs.
    pub sources: String,
    pub manifest_path: String,
    pub target_height: u32,
    pub workers: usize,
    pub seed: String,
    pub pipeline_version: String,
    /// Sample count N for each clip's sampling plan.
    pub sample_n: u64,
    pub trim_fraction: f64,
    pub stages: StageToggles,
    pub flow: FlowConfig,
    pub segmenter: SegmenterConfig,
    pub classifier: ClassifierConfig,
    /// External classifier service; empty url means heuristic-only.
    pub classifier_client: ClassifierClientConfig,
    pub scorer: ScorerClientConfig,
    pub filter: FilterConfig,
    pub caption: CaptionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sources: "sources.txt".into(),
            manifest_path: "manifest.jsonl".into(),
            target_height: 270,
            workers: 1,
            seed: "curate-v1".into(),
            pipeline_version: env!("CARGO_PKG_VERSION").into(),
            sample_n: 49,
            trim_fraction: 0.10,
            stages: StageToggles::default(),
            flow: FlowConfig::default(),
            segmenter: SegmenterConfig::default(),
            classifier: ClassifierConfig::default(),
            classifier_client: ClassifierClientConfig::default(),
            scorer: ScorerClientConfig::default(),
            filter: FilterConfig::default(),
            caption: CaptionConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Unreadable(path.display().to_string(), e))?;
        let cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| ConfigError::Invalid(path.display().to_string(), e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid("<config>".into(), msg));
        if self.workers == 0 {
            return invalid("workers must be >= 1".into());
        }
        if self.target_height < 64 {
            return invalid(format!("target_height {} below minimum 64", self.target_height));
        }
        if !(self.segmenter.theta_motion > 0.0
            && self.segmenter.theta_motion < self.segmenter.theta_cut)
        {
            return invalid("need 0 < theta_motion < theta_cut".into());
        }
        if !(self.segmenter.min_len_s > 0.0 && self.segmenter.min_len_s < self.segmenter.max_len_s)
        {
            return invalid("need 0 < min_len_s < max_len_s".into());
        }
        if !(0.0..=1.0).contains(&self.filter.c5_quota) {
            return invalid(format!("c5_quota {} outside [0,1]", self.filter.c5_quota));
        }
        if !(0.0..0.5).contains(&self.trim_fraction) {
            return invalid(format!("trim_fraction {} outside [0,0.5)", self.trim_fraction));
        }
        if self.stages.caption && self.caption.url.is_empty() {
            return invalid("caption stage enabled but caption.url is empty".into());
        }
        Ok(())
    }

    /// Effective config as TOML, for `--print-config`.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
