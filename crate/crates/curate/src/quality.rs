//! Aesthetic/quality scoring proxies and the clip retention filter.
//!
//! The builtin scorer maps cheap image statistics (colorfulness, global
//! contrast, Laplacian sharpness, blockiness) onto the external models'
//! [0,10] scales via fixed piecewise-linear calibration tables. External
//! scorer services plug in over the same protocol as the classifier.
//!
//! Retention follows the taxonomy rules: edited clips always drop, static
//! clips pass through a deterministic hash quota, everything else is
//! thresholded on both scores.

use serde::{Deserialize, Serialize};

use crate::http::{post_json, HttpError};
use crate::media::FrameBuffer;
use crate::motion::MotionClass;

#[derive(Debug, thiserror::Error)]
pub enum QualityError {
    #[error("no frames to score")]
    NoFrames,
    #[error("frames carry no color plane")]
    NoColor,
    #[error("scorer service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("malformed scorer response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerProvenance {
    BuiltinProxy,
    External,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub clip_id: String,
    pub aesthetic: f64,
    pub quality: f64,
    pub scorer_provenance: ScorerProvenance,
}

// --- calibration tables ------------------------------------------------
//
// Raw statistic -> [0,10] score breakpoints, linearly interpolated and
// clamped at the ends. Calibrated against the synthetic test cards and
// seeded-noise footage in `synth`.

/// Hasler-Suesstrunk colorfulness statistic.
const COLORFULNESS_TABLE: &[(f64, f64)] =
    &[(0.0, 0.0), (5.0, 1.0), (15.0, 3.0), (30.0, 5.5), (60.0, 8.0), (100.0, 10.0)];

/// Standard deviation of luma.
const CONTRAST_TABLE: &[(f64, f64)] =
    &[(0.0, 0.0), (10.0, 2.0), (25.0, 4.5), (45.0, 7.0), (70.0, 9.0), (90.0, 10.0)];

/// Variance of the 4-neighbor Laplacian of luma.
const SHARPNESS_TABLE: &[(f64, f64)] =
    &[(0.0, 0.0), (20.0, 2.0), (100.0, 5.0), (500.0, 8.0), (2000.0, 10.0)];

pub(crate) fn table_lookup(table: &[(f64, f64)], x: f64) -> f64 {
    let (x0, y0) = table[0];
    if x <= x0 {
        return y0;
    }
    for w in table.windows(2) {
        let ((xa, ya), (xb, yb)) = (w[0], w[1]);
        if x <= xb {
            return ya + (yb - ya) * (x - xa) / (xb - xa);
        }
    }
    table.last().unwrap().1
}

/// Hasler-Suesstrunk colorfulness of an interleaved RGB frame:
/// sqrt(sig_rg^2 + sig_yb^2) + 0.3 * sqrt(mu_rg^2 + mu_yb^2)
/// over the opponent channels rg = R-G, yb = (R+G)/2 - B.
pub fn colorfulness(rgb: &[u8]) -> f64 {
    let n = rgb.len() / 3;
    if n == 0 {
        return 0.0;
    }
    let mut s_rg = 0.0f64;
    let mut s2_rg = 0.0f64;
    let mut s_yb = 0.0f64;
    let mut s2_yb = 0.0f64;
    for px in rgb.chunks_exact(3) {
        let (r, g, b) = (px[0] as f64, px[1] as f64, px[2] as f64);
        let rg = r - g;
        let yb = (r + g) / 2.0 - b;
        s_rg += rg;
        s2_rg += rg * rg;
        s_yb += yb;
        s2_yb += yb * yb;
    }
    let nf = n as f64;
    let var_rg = (s2_rg / nf - (s_rg / nf).powi(2)).max(0.0);
    let var_yb = (s2_yb / nf - (s_yb / nf).powi(2)).max(0.0);
    (var_rg + var_yb).sqrt() + 0.3 * ((s_rg / nf).powi(2) + (s_yb / nf).powi(2)).sqrt()
}

pub fn luma_stddev(luma: &[u8]) -> f64 {
    let n = luma.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mean = luma.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = luma.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// Variance of the 4-neighbor Laplacian, the classic no-reference
/// sharpness statistic.
pub fn laplacian_variance(luma: &[u8], w: usize, h: usize) -> f64 {
    if w < 3 || h < 3 {
        return 0.0;
    }
    let mut sum = 0.0f64;
    let mut sum2 = 0.0f64;
    let mut n = 0u64;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let c = luma[y * w + x] as f64;
            let lap = 4.0 * c
                - luma[y * w + x - 1] as f64
                - luma[y * w + x + 1] as f64
                - luma[(y - 1) * w + x] as f64
                - luma[(y + 1) * w + x] as f64;
            sum += lap;
            sum2 += lap * lap;
            n += 1;
        }
    }
    let nf = n as f64;
    (sum2 / nf - (sum / nf).powi(2)).max(0.0)
}

/// Excess gradient energy on 8-pixel block boundaries relative to the
/// rest of the frame; positive values indicate compression blocking.
pub fn blockiness(luma: &[u8], w: usize, h: usize) -> f64 {
    if w < 17 || h < 17 {
        return 0.0;
    }
    let mut boundary = (0.0f64, 0u64);
    let mut interior = (0.0f64, 0u64);
    for y in 0..h {
        for x in 1..w {
            let g = (luma[y * w + x] as f64 - luma[y * w + x - 1] as f64).abs();
            if x % 8 == 0 {
                boundary.0 += g;
                boundary.1 += 1;
            } else {
                interior.0 += g;
                interior.1 += 1;
            }
        }
    }
    for x in 0..w {
        for y in 1..h {
            let g = (luma[y * w + x] as f64 - luma[(y - 1) * w + x] as f64).abs();
            if y % 8 == 0 {
                boundary.0 += g;
                boundary.1 += 1;
            } else {
                interior.0 += g;
                interior.1 += 1;
            }
        }
    }
    let b = boundary.0 / boundary.1.max(1) as f64;
    let i = interior.0 / interior.1.max(1) as f64;
    (b - i).max(0.0)
}

fn luma_of_rgb(rgb: &[u8]) -> Vec<u8> {
    rgb.chunks_exact(3)
        .map(|px| crate::y4m::bt601_luma(px[0], px[1], px[2]))
        .collect()
}

/// Scores a clip's sampled color frames with the builtin proxies.
pub fn score_builtin(clip_id: &str, frames: &[FrameBuffer]) -> Result<ScoreRecord, QualityError> {
    if frames.is_empty() {
        return Err(QualityError::NoFrames);
    }
    let mut color = 0.0f64;
    let mut contrast = 0.0f64;
    let mut sharp = 0.0f64;
    let mut blocky = 0.0f64;
    for f in frames {
        let rgb = f.rgb.as_deref().ok_or(QualityError::NoColor)?;
        let luma = luma_of_rgb(rgb);
        let (w, h) = (f.width as usize, f.height as usize);
        color += colorfulness(rgb);
        contrast += luma_stddev(&luma);
        sharp += laplacian_variance(&luma, w, h);
        blocky += blockiness(&luma, w, h);
    }
    let n = frames.len() as f64;
    let aesthetic = 0.6 * table_lookup(COLORFULNESS_TABLE, color / n)
        + 0.4 * table_lookup(CONTRAST_TABLE, contrast / n);
    let quality = table_lookup(SHARPNESS_TABLE, sharp / n) - 0.5 * (blocky / n);
    Ok(ScoreRecord {
        clip_id: clip_id.to_string(),
        aesthetic: aesthetic.clamp(0.0, 10.0),
        quality: quality.clamp(0.0, 10.0),
        scorer_provenance: ScorerProvenance::BuiltinProxy,
    })
}

// --- external scorer service ------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerClientConfig {
    pub url: String,
    pub timeout_s: f64,
    pub retries: u32,
    pub fallback: bool,
}

impl Default for ScorerClientConfig {
    fn default() -> Self {
        ScorerClientConfig { url: String::new(), timeout_s: 10.0, retries: 1, fallback: true }
    }
}

pub struct ScorerClient {
    cfg: ScorerClientConfig,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    clip_id: &'a str,
    count: usize,
    width: u32,
    height: u32,
    /// Base64-encoded interleaved RGB24 frames.
    frames: Vec<String>,
}

#[derive(Deserialize)]
struct ScoreResponse {
    aesthetic: f64,
    quality: f64,
}

impl ScorerClient {
    pub fn new(cfg: ScorerClientConfig) -> Self {
        ScorerClient { cfg }
    }

    pub fn score_remote(
        &self,
        clip_id: &str,
        frames: &[FrameBuffer],
    ) -> Result<ScoreRecord, QualityError> {
        use base64::Engine;
        if frames.is_empty() {
            return Err(QualityError::NoFrames);
        }
        let b64 = base64::engine::general_purpose::STANDARD;
        let mut encoded = Vec::with_capacity(frames.len());
        for f in frames {
            let rgb = f.rgb.as_deref().ok_or(QualityError::NoColor)?;
            encoded.push(b64.encode(rgb));
        }
        let req = ScoreRequest {
            clip_id,
            count: frames.len(),
            width: frames[0].width,
            height: frames[0].height,
            frames: encoded,
        };
        let result: Result<ScoreResponse, HttpError> =
            post_json(&self.cfg.url, &req, self.cfg.timeout_s, self.cfg.retries, &[]);
        match result {
            Ok(resp) => {
                if !(0.0..=10.0).contains(&resp.aesthetic)
                    || !(0.0..=10.0).contains(&resp.quality)
                {
                    return Err(QualityError::MalformedResponse(format!(
                        "scores ({}, {}) out of [0,10]",
                        resp.aesthetic, resp.quality
                    )));
                }
                Ok(ScoreRecord {
                    clip_id: clip_id.to_string(),
                    aesthetic: resp.aesthetic,
                    quality: resp.quality,
                    scorer_provenance: ScorerProvenance::External,
                })
            }
            Err(HttpError::BadBody(msg)) => Err(QualityError::MalformedResponse(msg)),
            Err(e) => {
                if self.cfg.fallback {
                    score_builtin(clip_id, frames)
                } else {
                    Err(QualityError::ServiceUnavailable(e.to_string()))
                }
            }
        }
    }
}

// --- retention filter --------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub theta_aes: f64,
    pub theta_qual: f64,
    pub c5_quota: f64,
    pub quota_seed: String,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            theta_aes: 3.5,
            theta_qual: 4.0,
            c5_quota: 0.05,
            quota_seed: "curate-v1".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Passed,
    StaticQuotaKept,
    Edited,
    StaticQuotaExcluded,
    LowAesthetic,
    LowQuality,
    Unfiltered,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decision {
    pub clip_id: String,
    pub keep: bool,
    pub reason: Reason,
}

/// 64-bit FNV-1a; the platform-independent quota hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn quota_accepts(cfg: &FilterConfig, clip_id: &str) -> bool {
    let mut key = cfg.quota_seed.clone().into_bytes();
    key.extend_from_slice(clip_id.as_bytes());
    (fnv1a64(&key) as f64) / (u64::MAX as f64 + 1.0) < cfg.c5_quota
}

/// One decision per clip: C6 always drops; C5 must pass both the hash
/// quota and the score thresholds; everything else is score-thresholded.
pub fn apply_filter(
    records: &[(ScoreRecord, MotionClass)],
    cfg: &FilterConfig,
) -> Vec<Decision> {
    records
        .iter()
        .map(|(score, class)| {
            let scores_pass = score.aesthetic >= cfg.theta_aes && score.quality >= cfg.theta_qual;
            let (keep, reason) = match class {
                MotionClass::C6 => (false, Reason::Edited),
                MotionClass::C5 => {
                    if !quota_accepts(cfg, &score.clip_id) {
                        (false, Reason::StaticQuotaExcluded)
                    } else if score.aesthetic < cfg.theta_aes {
                        (false, Reason::LowAesthetic)
                    } else if score.quality < cfg.theta_qual {
                        (false, Reason::LowQuality)
                    } else {
                        (true, Reason::StaticQuotaKept)
                    }
                }
                _ => {
                    if score.aesthetic < cfg.theta_aes {
                        (false, Reason::LowAesthetic)
                    } else if score.quality < cfg.theta_qual {
                        (false, Reason::LowQuality)
                    } else {
                        (true, Reason::Passed)
                    }
                }
            };
            let _ = scores_pass;
            Decision { clip_id: score.clip_id.clone(), keep, reason }
        })
        .collect()
}
