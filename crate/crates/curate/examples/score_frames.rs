//! Built-in aesthetic/quality proxy scores on a few test cards.
//!
//!     cargo run --example score_frames

use curate::media::FrameBuffer;
use curate::quality::{self, score_builtin};
use curate::synth;
use curate::y4m;

fn frame_of_rgb(rgb: Vec<u8>, w: usize, h: usize) -> FrameBuffer {
    let luma = rgb
        .chunks_exact(3)
        .map(|p| y4m::bt601_luma(p[0], p[1], p[2]))
        .collect();
    FrameBuffer {
        index: 0,
        timestamp_s: 0.0,
        width: w as u32,
        height: h as u32,
        luma,
        rgb: Some(rgb),
    }
}

fn main() {
    let (w, h) = (320usize, 180usize);
    let cards = [
        ("flat gray", synth::rgb_flat_gray(w, h)),
        ("color wheel", synth::rgb_color_wheel(w, h)),
        ("checkerboard", synth::rgb_checkerboard(w, h)),
        ("color noise", synth::rgb_noise(3, w, h)),
    ];
    for (name, rgb) in cards {
        let frame = frame_of_rgb(rgb, w, h);
        let color = quality::colorfulness(frame.rgb.as_ref().unwrap());
        let sharp = quality::laplacian_variance(&frame.luma, w, h);
        let rec = score_builtin(name, std::slice::from_ref(&frame)).unwrap();
        println!(
            "{name:<13} colorfulness {color:7.2}  lap-var {sharp:9.1}  -> aesthetic {:.2}  quality {:.2}",
            rec.aesthetic, rec.quality
        );
    }
}
