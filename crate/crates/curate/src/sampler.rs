//! Motion intensity and trim-then-uniform frame sampling plans.
//!
//! The intensity of a clip is `M = N * FPS / clip_n`: how many of the N
//! sampled frames fall into each second of source footage. Sampling trims
//! a fraction off both ends of the clip, then spreads N indices uniformly
//! across the remainder.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SamplerError {
    #[error("all inputs must be positive (N={0}, FPS={1}, clip_n={2})")]
    NonPositiveInput(u64, f64, u64),
    #[error("clip has {usable} usable frames after trimming, need {needed}")]
    InsufficientFrames { usable: u64, needed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n: u64,
    pub fps: f64,
    pub clip_n: u64,
    pub motion_intensity: f64,
    pub trim_fraction: f64,
    pub indices: Vec<u64>,
}

pub fn motion_intensity(n: u64, fps: f64, clip_n: u64) -> Result<f64, SamplerError> {
    if n == 0 || fps <= 0.0 || clip_n == 0 {
        return Err(SamplerError::NonPositiveInput(n, fps, clip_n));
    }
    Ok(n as f64 * fps / clip_n as f64)
}

/// Chooses N strictly increasing frame indices within the trimmed range
/// [floor(trim*clip_n), clip_n-1-floor(trim*clip_n)].
///
/// For N >= 2 index k lands at first + round_half_up(k*span/(N-1)),
/// computed in exact integer arithmetic; rounding duplicates are bumped
/// forward, which the precondition guarantees is always possible.
pub fn plan_samples(
    clip_n: u64,
    n: u64,
    fps: f64,
    trim_fraction: f64,
) -> Result<SamplingPlan, SamplerError> {
    if n == 0 || fps <= 0.0 || clip_n == 0 {
        return Err(SamplerError::NonPositiveInput(n, fps, clip_n));
    }
    let trim = (trim_fraction * clip_n as f64).floor() as u64;
    let usable = clip_n.saturating_sub(2 * trim);
    if usable < n {
        return Err(SamplerError::InsufficientFrames { usable, needed: n });
    }
    let first = trim;
    let last = clip_n - 1 - trim;
    let span = last - first;

    let mut indices = Vec::with_capacity(n as usize);
    if n == 1 {
        indices.push(first + (span + 1) / 2);
    } else {
        for k in 0..n {
            // round_half_up(k*span/(n-1)) = floor((2*k*span + (n-1)) / (2*(n-1)))
            let num = 2 * (k as u128) * (span as u128) + (n as u128 - 1);
            let idx = first + (num / (2 * (n as u128 - 1))) as u64;
            indices.push(idx);
        }
        for i in 1..indices.len() {
            if indices[i] <= indices[i - 1] {
                indices[i] = indices[i - 1] + 1;
            }
        }
    }
    debug_assert!(indices.last().copied().unwrap_or(first) <= last);

    Ok(SamplingPlan {
        n,
        fps,
        clip_n,
        motion_intensity: motion_intensity(n, fps, clip_n)?,
        trim_fraction,
        indices,
    })
}

/// Legacy fixed-stride sampler: picks N frames at a fixed stride from a
/// sub-clip starting at `start`. Reference point of comparison for the
/// adaptive planner; exists for tests and examples only.
pub fn fixed_stride_samples(clip_n: u64, n: u64, stride: u64, start: u64) -> Option<Vec<u64>> {
    if n == 0 || stride == 0 {
        return None;
    }
    let last = start + (n - 1) * stride;
    if last >= clip_n {
        return None;
    }
    Some((0..n).map(|k| start + k * stride).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intensity_pinned_values() {
        assert!((motion_intensity(85, 30.0, 255).unwrap() - 10.0).abs() <= 1e-12);
        assert!((motion_intensity(85, 24.0, 170).unwrap() - 12.0).abs() <= 1e-12);
        // 49 * 30 / 219 = 1470/219
        let m = motion_intensity(49, 30.0, 219).unwrap();
        assert!((m - 1470.0 / 219.0).abs() <= 1e-12);
    }

    #[test]
    fn intensity_rejects_non_positive() {
        assert!(motion_intensity(0, 30.0, 100).is_err());
        assert!(motion_intensity(10, 0.0, 100).is_err());
        assert!(motion_intensity(10, 30.0, 0).is_err());
    }

    #[test]
    fn plan_hand_computed() {
        let plan = plan_samples(100, 8, 30.0, 0.10).unwrap();
        assert_eq!(plan.indices, vec![10, 21, 33, 44, 55, 66, 78, 89]);
    }

    #[test]
    fn plan_two_frame_endpoints() {
        let plan = plan_samples(10, 2, 30.0, 0.10).unwrap();
        assert_eq!(plan.indices, vec![1, 8]);
    }

    #[test]
    fn plan_insufficient_frames() {
        assert!(matches!(
            plan_samples(50, 85, 30.0, 0.10),
            Err(SamplerError::InsufficientFrames { usable: 40, needed: 85 })
        ));
    }

    #[test]
    fn plan_single_sample_centered() {
        let plan = plan_samples(100, 1, 30.0, 0.10).unwrap();
        assert_eq!(plan.indices, vec![50]);
    }

    #[test]
    fn adaptive_span_covers_fixed_stride_span() {
        for clip_n in [90u64, 150, 300] {
            let n = 10;
            let plan = plan_samples(clip_n, n, 30.0, 0.10).unwrap();
            let adaptive_span = plan.indices.last().unwrap() - plan.indices[0];
            let fixed = fixed_stride_samples(clip_n, n, 3, 0).unwrap();
            let fixed_span = fixed.last().unwrap() - fixed[0];
            assert!(adaptive_span >= fixed_span, "clip_n={clip_n}");
        }
    }
}
