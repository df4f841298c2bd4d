//! Runs the heuristic camera-motion classifier over rendered clips of
//! every archetype and prints the label each one receives.
//!
//!     cargo run --example classify_motion

use curate::flow::FlowConfig;
use curate::motion::{self, ClassifierConfig, GlobalMotion, PairObservation};
use curate::segmenter::{self, MotionTrace, SegmenterConfig};
use curate::synth::{self, ClipKind};

fn observations(trace: &MotionTrace, luma_jump_max: f64) -> Vec<PairObservation> {
    let stats = &trace.pair_stats;
    (0..stats.len())
        .map(|i| PairObservation {
            motion: stats[i].motion.unwrap_or(GlobalMotion {
                affine: [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                divergence: 0.0,
                curl: 0.0,
                translation: (0.0, 0.0),
                inlier_fraction: 0.0,
                rms_residual: f64::MAX,
            }),
            center_magnitude: stats[i].center_magnitude,
            border_magnitude: stats[i].border_magnitude,
            luma_jump: i + 1 < stats.len()
                && (stats[i + 1].mean_luma - stats[i].mean_luma).abs() > luma_jump_max,
        })
        .collect()
}

fn main() {
    let kinds = [
        ClipKind::Pan,
        ClipKind::Oscillation,
        ClipKind::Rotation,
        ClipKind::Tracking,
        ClipKind::Static,
        ClipKind::Crossfade,
    ];
    let seg = SegmenterConfig::default();
    for kind in kinds {
        let frames = synth::render_clip_buffers(kind, 5, 160, 96, 30, 10.0);
        let trace =
            segmenter::build_trace("demo", 10.0, frames.into_iter().map(Ok), &FlowConfig::default())
                .unwrap();
        let obs = observations(&trace, seg.luma_jump_max);
        let label = motion::classify_clip(&obs, &ClassifierConfig::default()).unwrap();
        println!(
            "{kind:?}: {} (confidence {:.2}, {:?})",
            label.class.as_str(),
            label.confidence,
            label.provenance
        );
    }
}
