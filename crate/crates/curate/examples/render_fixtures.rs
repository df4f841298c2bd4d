//! Renders one synthetic clip per camera-motion archetype into ./fixtures.
//!
//!     cargo run --example render_fixtures [out_dir]

use std::path::PathBuf;

use curate::synth::{self, ClipKind};

fn main() -> std::io::Result<()> {
    let out: PathBuf =
        std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()).into();
    std::fs::create_dir_all(&out)?;

    let kinds = [
        ("pan", ClipKind::Pan),
        ("oscillation", ClipKind::Oscillation),
        ("rotation", ClipKind::Rotation),
        ("tracking", ClipKind::Tracking),
        ("static", ClipKind::Static),
        ("crossfade", ClipKind::Crossfade),
    ];
    for (name, kind) in kinds {
        let frames = synth::render_clip(kind, 7, 320, 180, 60);
        let path = out.join(format!("{name}.y4m"));
        synth::write_y4m_gray(&path, &frames, 320, 180, 30, 1)?;
        println!("wrote {} ({} frames, 320x180 @ 30fps)", path.display(), frames.len());
    }
    Ok(())
}
