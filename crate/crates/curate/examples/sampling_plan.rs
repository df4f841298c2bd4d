//! Motion-intensity and frame-sampling plans for a few clip lengths.
//!
//!     cargo run --example sampling_plan

use curate::sampler;

fn main() {
    let n = 8;
    let fps = 30.0;
    for clip_n in [100u64, 170, 255, 600] {
        match sampler::plan_samples(clip_n, n, fps, 0.10) {
            Ok(plan) => println!(
                "clip_n={clip_n:<4} M={:.2}  indices {:?}",
                plan.motion_intensity, plan.indices
            ),
            Err(e) => println!("clip_n={clip_n:<4} {e}"),
        }
    }

    // Contrast with the fixed-stride reference sampler.
    let stride = sampler::fixed_stride_samples(100, n, 4, 0).unwrap();
    println!("fixed stride 4    indices {stride:?}  (covers {} of 100 frames)", stride.last().unwrap() + 1);
}
