//! External captioner client and caption validation.
//!
//! Captions come from a vision-language service over HTTP; validation
//! checks the length and camera-operation vocabulary profile expected of
//! long-form spatio-temporal descriptions.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use regex::RegexBuilder;
use serde::{Deserialize, Serialize};

use crate::http::{post_json_with_attempts, HttpError};
use crate::media::FrameBuffer;

#[derive(Debug, thiserror::Error)]
pub enum CaptionError {
    #[error("caption service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("service returned an empty caption")]
    EmptyCaption,
    #[error("malformed caption response: {0}")]
    MalformedResponse(String),
    #[error("need 4..=32 sampled frames, got {0}")]
    BadFrameCount(usize),
}

pub const DEFAULT_VOCABULARY: &[&str] = &[
    "camera", "pan", "tilt", "dolly", "truck", "pedestal", "orbit", "zoom",
    "moves left", "moves right",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CaptionConfig {
    pub url: String,
    pub timeout_s: f64,
    pub rps_limit: f64,
    pub min_words: usize,
    pub vocabulary: Vec<String>,
    pub language_tag: String,
    pub template_id: String,
    /// Sleep schedule between retry attempts, seconds.
    pub backoff_s: Vec<f64>,
}

impl Default for CaptionConfig {
    fn default() -> Self {
        CaptionConfig {
            url: String::new(),
            timeout_s: 60.0,
            rps_limit: 2.0,
            min_words: 80,
            vocabulary: DEFAULT_VOCABULARY.iter().map(|s| s.to_string()).collect(),
            language_tag: "en".into(),
            template_id: "spatio-temporal-v1".into(),
            backoff_s: vec![1.0, 4.0, 16.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub clip_id: String,
    pub text: String,
    pub word_count: usize,
    pub camera_terms_found: Vec<String>,
    pub language_tag: String,
    pub model_id: String,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub too_short: bool,
    pub no_camera_terms: bool,
    pub non_target_language: bool,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        !self.too_short && !self.no_camera_terms && !self.non_target_language
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Case-insensitive, word-boundary-anchored vocabulary matcher. Single
/// words also match their common inflections (pans, panning, zoomed) but
/// never mid-word ("pants" does not contain "pan").
pub fn find_camera_terms(text: &str, vocabulary: &[String]) -> Vec<String> {
    let mut found = Vec::new();
    for term in vocabulary {
        let pattern = if term.contains(' ') {
            format!(r"\b{}\b", regex::escape(term))
        } else {
            format!(r"\b{}(?:s|ed|ing|ned|ning)?\b", regex::escape(term))
        };
        let re = RegexBuilder::new(&pattern)
            .case_insensitive(true)
            .build()
            .expect("vocabulary regex");
        if re.is_match(text) {
            found.push(term.clone());
        }
    }
    found
}

pub fn validate_caption(record: &CaptionRecord, cfg: &CaptionConfig) -> ValidationReport {
    ValidationReport {
        too_short: record.word_count < cfg.min_words,
        no_camera_terms: record.camera_terms_found.is_empty(),
        non_target_language: !record.language_tag.is_empty()
            && !cfg.language_tag.is_empty()
            && record.language_tag != cfg.language_tag,
    }
}

/// Simple shared minimum-interval rate limiter.
pub struct RateLimiter {
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(rps: f64) -> Self {
        let min_interval = if rps > 0.0 {
            Duration::from_secs_f64(1.0 / rps)
        } else {
            Duration::ZERO
        };
        RateLimiter { min_interval, last: Mutex::new(None) }
    }

    pub fn acquire(&self) {
        if self.min_interval.is_zero() {
            return;
        }
        let wait = {
            let mut last = self.last.lock().unwrap();
            let now = Instant::now();
            let wait = match *last {
                Some(prev) => (prev + self.min_interval).saturating_duration_since(now),
                None => Duration::ZERO,
            };
            *last = Some(now + wait);
            wait
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

pub struct CaptionClient {
    cfg: CaptionConfig,
    limiter: RateLimiter,
}

#[derive(Serialize)]
struct CaptionRequest<'a> {
    clip_id: &'a str,
    template_id: &'a str,
    count: usize,
    width: u32,
    height: u32,
    /// Base64-encoded interleaved RGB24 frames.
    frames: Vec<String>,
}

#[derive(Deserialize)]
struct CaptionResponse {
    text: String,
    #[serde(default)]
    model_id: String,
    #[serde(default)]
    language_tag: Option<String>,
}

impl CaptionClient {
    pub fn new(cfg: CaptionConfig) -> Self {
        let limiter = RateLimiter::new(cfg.rps_limit);
        CaptionClient { cfg, limiter }
    }

    pub fn config(&self) -> &CaptionConfig {
        &self.cfg
    }

    pub fn request_caption(
        &self,
        clip_id: &str,
        frames: &[FrameBuffer],
    ) -> Result<CaptionRecord, CaptionError> {
        use base64::Engine;
        if !(4..=32).contains(&frames.len()) {
            return Err(CaptionError::BadFrameCount(frames.len()));
        }
        let b64 = base64::engine::general_purpose::STANDARD;
        let req = CaptionRequest {
            clip_id,
            template_id: &self.cfg.template_id,
            count: frames.len(),
            width: frames[0].width,
            height: frames[0].height,
            frames: frames
                .iter()
                .map(|f| b64.encode(f.rgb.as_deref().unwrap_or(&f.luma)))
                .collect(),
        };
        self.limiter.acquire();
        let result: Result<(CaptionResponse, u32), HttpError> = post_json_with_attempts(
            &self.cfg.url,
            &req,
            self.cfg.timeout_s,
            2, // 3 attempts total
            &self.cfg.backoff_s,
        );
        match result {
            Ok((resp, attempts)) => {
                if resp.text.trim().is_empty() {
                    return Err(CaptionError::EmptyCaption);
                }
                Ok(CaptionRecord {
                    clip_id: clip_id.to_string(),
                    word_count: word_count(&resp.text),
                    camera_terms_found: find_camera_terms(&resp.text, &self.cfg.vocabulary),
                    language_tag: resp
                        .language_tag
                        .unwrap_or_else(|| self.cfg.language_tag.clone()),
                    model_id: resp.model_id,
                    text: resp.text,
                    attempts,
                })
            }
            Err(HttpError::BadBody(msg)) => Err(CaptionError::MalformedResponse(msg)),
            Err(e) => Err(CaptionError::ServiceUnavailable(e.to_string())),
        }
    }
}
