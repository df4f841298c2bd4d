//! Cut detection and clip span extraction from per-pair motion traces.
//!
//! A pair qualifies when its mean flow magnitude clears the lower motion
//! gate; a pair is a cut when the magnitude exceeds the upper bound or the
//! mean luma jumps. Spans are maximal qualifying runs that never cross a
//! cut, clamped to the configured duration window.

use serde::{Deserialize, Serialize};

use crate::flow::{self, FlowConfig};
use crate::media::{FrameBuffer, MediaError};
use crate::motion::{self, GlobalMotion};

#[derive(Debug, thiserror::Error)]
pub enum SegmentError {
    #[error("stream yielded {0} frames; need at least 2")]
    TooFewFrames(u64),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Flow(#[from] crate::flow::FlowError),
}

/// Statistics for one adjacent frame pair (i, i+1).
#[derive(Debug, Clone)]
pub struct PairStats {
    pub mean_magnitude: f64,
    pub mean_vector: (f64, f64),
    /// Average of the two frames' mean luma.
    pub mean_luma: f64,
    /// RMS residual of the global affine fit; large when no global model
    /// explains the pair (edits, transitions).
    pub fit_residual: f64,
    pub motion: Option<GlobalMotion>,
    pub center_magnitude: f64,
    pub border_magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct MotionTrace {
    pub source_id: String,
    pub fps: f64,
    pub pair_stats: Vec<PairStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmenterConfig {
    pub theta_motion: f64,
    pub theta_cut: f64,
    pub luma_jump_max: f64,
    pub min_len_s: f64,
    pub max_len_s: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            theta_motion: 1.0,
            theta_cut: 20.0,
            luma_jump_max: 40.0,
            min_len_s: 3.0,
            max_len_s: 16.0,
        }
    }
}

/// Inclusive frame range of one retained clip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipSpan {
    pub source_id: String,
    pub start_frame: u64,
    pub end_frame: u64,
}

impl ClipSpan {
    pub fn frame_count(&self) -> u64 {
        self.end_frame - self.start_frame + 1
    }
    /// Pair indices covered by this span: [start_frame, end_frame - 1].
    pub fn pair_range(&self) -> std::ops::Range<usize> {
        self.start_frame as usize..self.end_frame as usize
    }
}

/// Runs optical flow over every adjacent pair of a frame stream.
pub fn build_trace<I>(
    source_id: &str,
    fps: f64,
    frames: I,
    flow_cfg: &FlowConfig,
) -> Result<MotionTrace, SegmentError>
where
    I: IntoIterator<Item = Result<FrameBuffer, MediaError>>,
{
    let mut pair_stats = Vec::new();
    let mut prev: Option<(FrameBuffer, f64)> = None;
    let mut count = 0u64;
    for frame in frames {
        let frame = frame?;
        count += 1;
        let mean_luma = frame.mean_luma();
        if let Some((p, p_luma)) = prev.take() {
            let field = flow::estimate_flow(&p, &frame, flow_cfg)?;
            let stats = flow::flow_stats(&field);
            let (center, border) = flow::region_magnitudes(&field);
            let motion = motion::fit_global_motion(&field).ok();
            // With no usable fit, treat the pair as unexplained by any
            // global model: residual pinned high so edits surface.
            let fit_residual = motion
                .as_ref()
                .map(|m| m.rms_residual)
                .unwrap_or(f64::INFINITY);
            pair_stats.push(PairStats {
                mean_magnitude: stats.mean_magnitude,
                mean_vector: stats.mean_vector,
                mean_luma: (p_luma + mean_luma) / 2.0,
                fit_residual,
                motion,
                center_magnitude: center,
                border_magnitude: border,
            });
        }
        prev = Some((frame, mean_luma));
    }
    if count < 2 {
        return Err(SegmentError::TooFewFrames(count));
    }
    Ok(MotionTrace { source_id: source_id.to_string(), fps, pair_stats })
}

/// Pair indices flagged as hard cuts, sorted ascending.
pub fn detect_cuts(trace: &MotionTrace, cfg: &SegmenterConfig) -> Vec<usize> {
    let stats = &trace.pair_stats;
    let mut cuts = Vec::new();
    for i in 0..stats.len() {
        let flow_cut = stats[i].mean_magnitude > cfg.theta_cut;
        let luma_cut = i + 1 < stats.len()
            && (stats[i + 1].mean_luma - stats[i].mean_luma).abs() > cfg.luma_jump_max;
        if flow_cut || luma_cut {
            cuts.push(i);
        }
    }
    cuts
}

/// Extracts maximal qualifying runs into clip spans.
pub fn extract_spans(trace: &MotionTrace, cfg: &SegmenterConfig) -> Vec<ClipSpan> {
    let cuts = detect_cuts(trace, cfg);
    extract_spans_with_cuts(trace, cfg, &cuts)
}

pub fn extract_spans_with_cuts(
    trace: &MotionTrace,
    cfg: &SegmenterConfig,
    cuts: &[usize],
) -> Vec<ClipSpan> {
    let min_pairs = ((cfg.min_len_s * trace.fps).ceil() as usize).max(1);
    let max_pairs = ((cfg.max_len_s * trace.fps).floor() as usize).max(min_pairs);
    let is_cut = |i: usize| cuts.binary_search(&i).is_ok();

    let mut spans = Vec::new();
    let mut run_start: Option<usize> = None;
    let n = trace.pair_stats.len();
    for i in 0..=n {
        let qualifies =
            i < n && trace.pair_stats[i].mean_magnitude >= cfg.theta_motion && !is_cut(i);
        match (qualifies, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(start)) => {
                emit_run(trace, start, i - 1, min_pairs, max_pairs, &mut spans);
                run_start = None;
            }
            _ => {}
        }
    }
    spans
}

/// Splits a qualifying pair run [a, b] into spans of at most `max_pairs`
/// pairs, greedy left-to-right, dropping pieces shorter than `min_pairs`.
fn emit_run(
    trace: &MotionTrace,
    a: usize,
    b: usize,
    min_pairs: usize,
    max_pairs: usize,
    out: &mut Vec<ClipSpan>,
) {
    let mut start = a;
    while start <= b {
        let end = (start + max_pairs - 1).min(b);
        let len = end - start + 1;
        if len >= min_pairs {
            out.push(ClipSpan {
                source_id: trace.source_id.clone(),
                start_frame: start as u64,
                end_frame: end as u64 + 1,
            });
        }
        start = end + 1;
    }
}
