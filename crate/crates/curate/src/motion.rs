//! Global parametric motion: robust affine fit per frame pair, its
//! divergence/curl decomposition, and the C1..C6 clip classifier.
//!
//! The classifier is a deterministic rule cascade over time-aggregated
//! per-pair statistics. An external classifier service can be swapped in
//! through `classify_remote`, with the cascade as fallback.

use serde::{Deserialize, Serialize};

use crate::flow::FlowField;
use crate::http::{post_json, HttpError};

#[derive(Debug, thiserror::Error)]
pub enum MotionError {
    #[error("affine fit needs at least 6 valid flow points, got {0}")]
    InsufficientPoints(usize),
    #[error("cannot classify an empty clip")]
    EmptyClip,
    #[error("classifier service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("malformed classifier response: {0}")]
    MalformedResponse(String),
}

/// Fitted global affine motion of one frame pair, in frame-centered
/// coordinates. `affine` holds the map (a,b,c,d,tx,ty) taking
/// (x,y) -> (a x + b y + tx, c x + d y + ty); identity flow gives
/// a=d=1, b=c=0, translation (0,0).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GlobalMotion {
    pub affine: [f64; 6],
    pub divergence: f64,
    pub curl: f64,
    pub translation: (f64, f64),
    pub inlier_fraction: f64,
    pub rms_residual: f64,
}

impl GlobalMotion {
    pub fn translation_norm(&self) -> f64 {
        (self.translation.0.powi(2) + self.translation.1.powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MotionClass {
    /// Camera orbiting or target self-rotation.
    C1,
    /// Local horizontal/vertical tilt oscillation.
    C2,
    /// Camera tracking a moving target.
    C3,
    /// Linear camera motion.
    C4,
    /// Static or near-static camera.
    C5,
    /// Software-edited (transitions, artificial effects).
    C6,
}

impl MotionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            MotionClass::C1 => "C1",
            MotionClass::C2 => "C2",
            MotionClass::C3 => "C3",
            MotionClass::C4 => "C4",
            MotionClass::C5 => "C5",
            MotionClass::C6 => "C6",
        }
    }

    pub fn parse(s: &str) -> Option<MotionClass> {
        Some(match s {
            "C1" => MotionClass::C1,
            "C2" => MotionClass::C2,
            "C3" => MotionClass::C3,
            "C4" => MotionClass::C4,
            "C5" => MotionClass::C5,
            "C6" => MotionClass::C6,
            _ => return None,
        })
    }

    pub const ALL: [MotionClass; 6] = [
        MotionClass::C1,
        MotionClass::C2,
        MotionClass::C3,
        MotionClass::C4,
        MotionClass::C5,
        MotionClass::C6,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelProvenance {
    Heuristic,
    External,
    Fallback,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MotionLabel {
    pub class: MotionClass,
    pub confidence: f64,
    pub provenance: LabelProvenance,
}

/// Everything the cascade needs about one frame pair.
#[derive(Debug, Clone, Copy)]
pub struct PairObservation {
    pub motion: GlobalMotion,
    /// Mean flow magnitude in the middle 1/3 x 1/3 of the frame.
    pub center_magnitude: f64,
    /// Mean flow magnitude outside that center region.
    pub border_magnitude: f64,
    /// Whether segmentation flagged this pair as a luma-jump cut.
    pub luma_jump: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub static_mag: f64,
    pub static_rate: f64,
    pub rot_rate: f64,
    pub parallax_inlier: f64,
    pub residual_spike: f64,
    pub edit_frac: f64,
    pub track_center_mag: f64,
    /// Border flow gate for the tracking rule; matches the segmenter's
    /// motion threshold.
    pub theta_motion: f64,
    pub fallback: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            static_mag: 0.5,
            static_rate: 0.002,
            rot_rate: 0.004,
            parallax_inlier: 0.6,
            residual_spike: 5.0,
            edit_frac: 0.02,
            track_center_mag: 0.5,
            theta_motion: 1.0,
            fallback: true,
        }
    }
}

/// Least-squares affine fit with two rounds of median-based reweighting.
pub fn fit_global_motion(field: &FlowField) -> Result<GlobalMotion, MotionError> {
    let cx = (field.width as f64 - 1.0) / 2.0;
    let cy = (field.height as f64 - 1.0) / 2.0;
    let mut samples: Vec<(f64, f64, f64, f64)> = field
        .points
        .iter()
        .zip(&field.vectors)
        .zip(&field.valid)
        .filter(|(_, &ok)| ok)
        .map(|((&(px, py), &(u, v)), _)| (px as f64 - cx, py as f64 - cy, u as f64, v as f64))
        .collect();
    if samples.len() < 6 {
        return Err(MotionError::InsufficientPoints(samples.len()));
    }

    let mut params = fit_once(&samples);
    for _ in 0..2 {
        let mut residuals: Vec<f64> = samples.iter().map(|s| residual(&params, s)).collect();
        let mut sorted = residuals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let thresh = 3.0 * median + 1e-9;
        let inliers: Vec<(f64, f64, f64, f64)> = samples
            .iter()
            .zip(&residuals)
            .filter(|(_, &r)| r < thresh)
            .map(|(&s, _)| s)
            .collect();
        if inliers.len() < 6 {
            break;
        }
        params = fit_once(&inliers);
        residuals = samples.iter().map(|s| residual(&params, s)).collect();
        let _ = residuals;
    }

    let residuals: Vec<f64> = samples.iter().map(|s| residual(&params, s)).collect();
    let mut sorted = residuals.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let thresh = 3.0 * median + 1e-9;
    let inlier_res: Vec<f64> = residuals.iter().copied().filter(|&r| r < thresh).collect();
    let inlier_fraction = inlier_res.len() as f64 / samples.len() as f64;
    let rms = if inlier_res.is_empty() {
        0.0
    } else {
        (inlier_res.iter().map(|r| r * r).sum::<f64>() / inlier_res.len() as f64).sqrt()
    };
    samples.clear();

    let [du_dx, du_dy, tx, dv_dx, dv_dy, ty] = params;
    Ok(GlobalMotion {
        affine: [1.0 + du_dx, du_dy, dv_dx, 1.0 + dv_dy, tx, ty],
        divergence: (du_dx + dv_dy) / 2.0,
        curl: (dv_dx - du_dy) / 2.0,
        translation: (tx, ty),
        inlier_fraction,
        rms_residual: rms,
    })
}

/// Displacement-model residual ‖(u,v) − A(x,y) − t‖ for one sample.
fn residual(p: &[f64; 6], &(x, y, u, v): &(f64, f64, f64, f64)) -> f64 {
    let ru = u - (p[0] * x + p[1] * y + p[2]);
    let rv = v - (p[3] * x + p[4] * y + p[5]);
    (ru * ru + rv * rv).sqrt()
}

/// Solves the two 3-parameter normal systems sharing one moment matrix.
fn fit_once(samples: &[(f64, f64, f64, f64)]) -> [f64; 6] {
    let mut m = [[0.0f64; 3]; 3];
    let mut bu = [0.0f64; 3];
    let mut bv = [0.0f64; 3];
    for &(x, y, u, v) in samples {
        let row = [x, y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            bu[i] += row[i] * u;
            bv[i] += row[i] * v;
        }
    }
    let su = solve3(m, bu);
    let sv = solve3(m, bv);
    [su[0], su[1], su[2], sv[0], sv[1], sv[2]]
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        let p = m[col][col];
        if p.abs() < 1e-12 {
            continue;
        }
        for row in 0..3 {
            if row == col {
                continue;
            }
            let f = m[row][col] / p;
            for k in 0..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for i in 0..3 {
        x[i] = if m[i][i].abs() < 1e-12 { 0.0 } else { b[i] / m[i][i] };
    }
    x
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

fn squash(margin: f64) -> f64 {
    let m = margin.max(0.0);
    (m / (1.0 + m)).clamp(0.0, 1.0)
}

/// Rule cascade over a clip's per-pair observations.
pub fn classify_clip(
    pairs: &[PairObservation],
    cfg: &ClassifierConfig,
) -> Result<MotionLabel, MotionError> {
    if pairs.is_empty() {
        return Err(MotionError::EmptyClip);
    }
    let n = pairs.len() as f64;
    let done = |class, confidence| {
        Ok(MotionLabel { class, confidence, provenance: LabelProvenance::Heuristic })
    };

    // (1) edited: residual spikes or luma-jump cut flags.
    let edit_hits = pairs
        .iter()
        .filter(|p| p.motion.rms_residual > cfg.residual_spike || p.luma_jump)
        .count() as f64;
    let edit_frac = edit_hits / n;
    if edit_frac > cfg.edit_frac {
        return done(MotionClass::C6, squash(edit_frac / cfg.edit_frac - 1.0));
    }

    let mut trans_norms: Vec<f64> = pairs.iter().map(|p| p.motion.translation_norm()).collect();
    let med_trans = median(&mut trans_norms);
    let mut divs: Vec<f64> = pairs.iter().map(|p| p.motion.divergence.abs()).collect();
    let med_div = median(&mut divs);
    let mut curls: Vec<f64> = pairs.iter().map(|p| p.motion.curl.abs()).collect();
    let med_curl = median(&mut curls);

    // (2) static.
    if med_trans < cfg.static_mag && med_div < cfg.static_rate && med_curl < cfg.static_rate {
        return done(MotionClass::C5, squash(cfg.static_mag / (med_trans + 1e-9) - 1.0));
    }

    // (3) orbit / self-rotation: sustained curl, or parallax (low inlier
    // fraction) with a coherent translation direction.
    let mut inliers: Vec<f64> = pairs.iter().map(|p| p.motion.inlier_fraction).collect();
    let med_inlier = median(&mut inliers);
    let sum_t = pairs.iter().fold((0.0, 0.0), |acc, p| {
        (acc.0 + p.motion.translation.0, acc.1 + p.motion.translation.1)
    });
    let net = (sum_t.0.powi(2) + sum_t.1.powi(2)).sqrt();
    let path: f64 = pairs.iter().map(|p| p.motion.translation_norm()).sum();
    let coherence = if path > 1e-9 { net / path } else { 0.0 };
    if med_curl >= cfg.rot_rate {
        return done(MotionClass::C1, squash(med_curl / cfg.rot_rate - 1.0));
    }
    if med_inlier < cfg.parallax_inlier && coherence > 0.7 {
        return done(MotionClass::C1, squash(cfg.parallax_inlier / (med_inlier + 1e-9) - 1.0));
    }

    // (4) tracking: center locked, border streaming.
    let mut centers: Vec<f64> = pairs.iter().map(|p| p.center_magnitude).collect();
    let med_center = median(&mut centers);
    let mut borders: Vec<f64> = pairs.iter().map(|p| p.border_magnitude).collect();
    let med_border = median(&mut borders);
    if med_center < cfg.track_center_mag && med_border >= cfg.theta_motion {
        return done(MotionClass::C3, squash(med_border / (med_center + 1e-9) - 1.0));
    }

    // (5) oscillation: dominant translation axis reverses sign at least
    // twice and the net displacement stays small against the path length.
    let sum_abs_x: f64 = pairs.iter().map(|p| p.motion.translation.0.abs()).sum();
    let sum_abs_y: f64 = pairs.iter().map(|p| p.motion.translation.1.abs()).sum();
    let axis: Vec<f64> = if sum_abs_x >= sum_abs_y {
        pairs.iter().map(|p| p.motion.translation.0).collect()
    } else {
        pairs.iter().map(|p| p.motion.translation.1).collect()
    };
    let axis_path: f64 = axis.iter().map(|v| v.abs()).sum();
    let axis_net: f64 = axis.iter().sum::<f64>().abs();
    let deadband = cfg.static_mag / 2.0;
    let mut crossings = 0u32;
    let mut last_sign = 0i32;
    for &v in &axis {
        if v.abs() < deadband {
            continue;
        }
        let sign = if v > 0.0 { 1 } else { -1 };
        if last_sign != 0 && sign != last_sign {
            crossings += 1;
        }
        last_sign = sign;
    }
    if crossings >= 2 && axis_path > 1e-9 && axis_net / axis_path < 0.5 {
        return done(MotionClass::C2, squash(1.0 - axis_net / axis_path));
    }

    // (6) default: linear camera motion.
    done(MotionClass::C4, squash(coherence * med_trans / cfg.static_mag - 1.0).max(0.1))
}

// --- external classifier service --------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierClientConfig {
    pub url: String,
    pub timeout_s: f64,
    pub retries: u32,
}

impl Default for ClassifierClientConfig {
    fn default() -> Self {
        ClassifierClientConfig { url: String::new(), timeout_s: 10.0, retries: 1 }
    }
}

pub struct ClassifierClient {
    cfg: ClassifierClientConfig,
}

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    count: usize,
    width: u32,
    height: u32,
    /// Base64-encoded 8-bit gray planes, one per frame.
    frames: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clip_id: Option<&'a str>,
}

#[derive(Deserialize)]
struct ClassifyResponse {
    label: String,
    confidence: f64,
}

impl ClassifierClient {
    pub fn new(cfg: ClassifierClientConfig) -> Self {
        ClassifierClient { cfg }
    }

    /// Posts sampled frames to the classifier service. On service failure
    /// with `fallback` enabled, runs the heuristic cascade instead and
    /// marks the label provenance as `fallback`.
    pub fn classify_remote(
        &self,
        frames: &[crate::media::FrameBuffer],
        heuristic_input: &[PairObservation],
        cfg: &ClassifierConfig,
    ) -> Result<MotionLabel, MotionError> {
        use base64::Engine;
        let b64 = base64::engine::general_purpose::STANDARD;
        let (width, height) = frames
            .first()
            .map(|f| (f.width, f.height))
            .unwrap_or((0, 0));
        let req = ClassifyRequest {
            count: frames.len(),
            width,
            height,
            frames: frames.iter().map(|f| b64.encode(&f.luma)).collect(),
            clip_id: None,
        };
        let result: Result<ClassifyResponse, HttpError> =
            post_json(&self.cfg.url, &req, self.cfg.timeout_s, self.cfg.retries, &[]);
        match result {
            Ok(resp) => {
                let class = MotionClass::parse(&resp.label).ok_or_else(|| {
                    MotionError::MalformedResponse(format!("unknown label {:?}", resp.label))
                })?;
                if !(0.0..=1.0).contains(&resp.confidence) {
                    return Err(MotionError::MalformedResponse(format!(
                        "confidence {} out of [0,1]",
                        resp.confidence
                    )));
                }
                Ok(MotionLabel {
                    class,
                    confidence: resp.confidence,
                    provenance: LabelProvenance::External,
                })
            }
            Err(HttpError::BadBody(msg)) => Err(MotionError::MalformedResponse(msg)),
            Err(e) => {
                if cfg.fallback {
                    let mut label = classify_clip(heuristic_input, cfg)?;
                    label.provenance = LabelProvenance::Fallback;
                    Ok(label)
                } else {
                    Err(MotionError::ServiceUnavailable(e.to_string()))
                }
            }
        }
    }
}
