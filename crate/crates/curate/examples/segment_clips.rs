//! Cut detection and clip-span extraction on a synthetic source that
//! alternates still holds, a pan, and a hard cut.
//!
//!     cargo run --example segment_clips

use curate::flow::FlowConfig;
use curate::segmenter::{self, SegmenterConfig};
use curate::synth::{self, Texture};

fn main() {
    let (w, h, fps) = (240usize, 135usize, 10.0);
    let scene_a = Texture::noise(21, 512, 512);
    let scene_b = Texture::noise(22, 512, 512).with_brightness(-80.0);

    // Hold, pan, hold, hard cut into a second panning scene.
    let mut frames: Vec<Vec<u8>> = Vec::new();
    for _ in 0..10 {
        frames.push(scene_a.render(w, h, 0.0, 0.0));
    }
    for t in 0..40 {
        frames.push(scene_a.render(w, h, 2.0 * t as f32, 0.0));
    }
    for _ in 0..10 {
        frames.push(scene_a.render(w, h, 78.0, 0.0));
    }
    for t in 0..40 {
        frames.push(scene_b.render(w, h, 0.0, 1.8 * t as f32));
    }

    let buffers = frames
        .into_iter()
        .enumerate()
        .map(|(i, f)| Ok(synth::frame_buffer(f, w, h, i as u64, fps)));
    let trace =
        segmenter::build_trace("example-source", fps, buffers, &FlowConfig::default()).unwrap();

    let cfg = SegmenterConfig { min_len_s: 2.0, ..Default::default() };
    let cuts = segmenter::detect_cuts(&trace, &cfg);
    println!("{} frame pairs, cuts at pair indices {:?}", trace.pair_stats.len(), cuts);
    for span in segmenter::extract_spans(&trace, &cfg) {
        println!(
            "span frames {:>3}..={:<3}  ({:.1} s)",
            span.start_frame,
            span.end_frame,
            span.frame_count() as f64 / fps
        );
    }
}
