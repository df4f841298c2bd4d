//! Sparse pyramidal optical flow on a synthetic pair with known shift.
//!
//!     cargo run --example estimate_flow [dx] [dy]

use curate::flow::{self, FlowConfig};
use curate::synth::{self, Texture};

fn main() {
    let mut args = std::env::args().skip(1);
    let dx: f32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let dy: f32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(-1.5);

    let (w, h) = (320usize, 180usize);
    let tex = Texture::noise(9, 512, 512);
    let a = synth::frame_buffer(tex.render(w, h, 0.0, 0.0), w, h, 0, 30.0);
    let b = synth::frame_buffer(tex.render(w, h, dx, dy), w, h, 1, 30.0);

    let cfg = FlowConfig::default();
    let field = flow::estimate_flow(&a, &b, &cfg).expect("flow");
    let stats = flow::flow_stats(&field);
    let (center, border) = flow::region_magnitudes(&field);

    println!("true shift        ({dx}, {dy})");
    println!(
        "mean flow vector  ({:.3}, {:.3})  over {} grid points, {:.0}% valid",
        stats.mean_vector.0,
        stats.mean_vector.1,
        field.points.len(),
        stats.valid_fraction * 100.0
    );
    println!("mean magnitude    {:.3} px (p95 {:.3})", stats.mean_magnitude, stats.p95_magnitude);
    println!("center vs border  {:.3} / {:.3} px", center, border);
}
