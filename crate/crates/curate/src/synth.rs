//! Deterministic synthetic video fixtures.
//!
//! Everything here renders from seeded noise textures so tests and examples
//! get reproducible footage with known ground-truth motion: pans,
//! oscillations, rotations, zooms, tracked subjects, static shots and
//! crossfade edits.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::media::FrameBuffer;
use crate::y4m;

/// Smoothed seeded noise texture, sampled with wrap-around bilinear
/// interpolation so arbitrary offsets stay in range.
pub struct Texture {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Texture {
    pub fn noise(seed: u64, w: usize, h: usize) -> Texture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f32> = (0..w * h).map(|_| rng.gen_range(0.0..255.0)).collect();
        // Two box-blur passes leave enough gradient for LK windows.
        let mut tex = Texture { w, h, data: raw };
        tex.data = tex.blur(2);
        tex.data = tex.blur(2);
        tex
    }

    /// Same texture shifted toward a different mean luma, for scene cuts.
    pub fn with_brightness(&self, delta: f32) -> Texture {
        Texture {
            w: self.w,
            h: self.h,
            data: self.data.iter().map(|&v| (v + delta).clamp(0.0, 255.0)).collect(),
        }
    }

    fn blur(&self, radius: i64) -> Vec<f32> {
        let mut out = vec![0.0f32; self.w * self.h];
        let norm = ((2 * radius + 1) * (2 * radius + 1)) as f32;
        for y in 0..self.h as i64 {
            for x in 0..self.w as i64 {
                let mut acc = 0.0;
                for dy in -radius..=radius {
                    for dx in -radius..=radius {
                        acc += self.wrap(x + dx, y + dy);
                    }
                }
                out[y as usize * self.w + x as usize] = acc / norm;
            }
        }
        out
    }

    fn wrap(&self, x: i64, y: i64) -> f32 {
        let x = x.rem_euclid(self.w as i64) as usize;
        let y = y.rem_euclid(self.h as i64) as usize;
        self.data[y * self.w + x]
    }

    pub fn sample(&self, x: f32, y: f32) -> f32 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as i64, y0 as i64);
        let a = self.wrap(x0, y0);
        let b = self.wrap(x0 + 1, y0);
        let c = self.wrap(x0, y0 + 1);
        let d = self.wrap(x0 + 1, y0 + 1);
        a + fx * (b - a) + fy * (c - a) + fx * fy * (a - b - c + d)
    }

    /// Renders a w x h gray frame with the content shifted by (offx, offy):
    /// positive offx moves the scene to the right, so optical flow from the
    /// unshifted frame to this one is (+offx, +offy).
    pub fn render(&self, w: usize, h: usize, offx: f32, offy: f32) -> Vec<u8> {
        self.render_warp(w, h, |x, y| (x - offx, y - offy))
    }

    /// Renders through an arbitrary dest -> texture coordinate map.
    pub fn render_warp(
        &self,
        w: usize,
        h: usize,
        map: impl Fn(f32, f32) -> (f32, f32),
    ) -> Vec<u8> {
        let mut out = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = map(x as f32, y as f32);
                out[y * w + x] = (self.sample(sx, sy) + 0.5).floor().clamp(0.0, 255.0) as u8;
            }
        }
        out
    }
}

pub fn frame_buffer(luma: Vec<u8>, w: usize, h: usize, index: u64, fps: f64) -> FrameBuffer {
    FrameBuffer {
        index,
        timestamp_s: index as f64 / fps,
        width: w as u32,
        height: h as u32,
        luma,
        rgb: None,
    }
}

fn to_buffers(frames: Vec<Vec<u8>>, w: usize, h: usize, fps: f64) -> Vec<FrameBuffer> {
    frames
        .into_iter()
        .enumerate()
        .map(|(i, luma)| frame_buffer(luma, w, h, i as u64, fps))
        .collect()
}

/// The six camera-motion archetypes the fixture renderer can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipKind {
    /// Constant-velocity pan.
    Pan,
    /// Sinusoidal pan with several direction reversals and small net drift.
    Oscillation,
    /// In-plane rotation about the frame center.
    Rotation,
    /// Frame-locked subject over a streaming background.
    Tracking,
    /// Static camera with sub-pixel jitter.
    Static,
    /// Pan interrupted by a crossfade into a different, brighter scene.
    Crossfade,
}

/// Renders a gray clip of `n` frames at `w` x `h` for one archetype.
pub fn render_clip(kind: ClipKind, seed: u64, w: usize, h: usize, n: usize) -> Vec<Vec<u8>> {
    let tex = Texture::noise(seed, 512, 512);
    match kind {
        ClipKind::Pan => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
            let angle: f32 = rng.gen_range(0.0..std::f32::consts::TAU);
            let speed: f32 = rng.gen_range(1.5..3.5);
            let (dx, dy) = (speed * angle.cos(), speed * angle.sin());
            (0..n)
                .map(|t| tex.render(w, h, dx * t as f32, dy * t as f32))
                .collect()
        }
        ClipKind::Oscillation => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
            let amp: f32 = rng.gen_range(4.0..8.0);
            let period = n as f32 / 2.5; // ~2.5 cycles -> several reversals
            let vertical = rng.gen_bool(0.5);
            (0..n)
                .map(|t| {
                    let off = amp * (std::f32::consts::TAU * t as f32 / period).sin();
                    if vertical {
                        tex.render(w, h, 0.0, off)
                    } else {
                        tex.render(w, h, off, 0.0)
                    }
                })
                .collect()
        }
        ClipKind::Rotation => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3c3c);
            let rate: f32 = rng.gen_range(0.008..0.02) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (cx, cy) = (w as f32 / 2.0, h as f32 / 2.0);
            (0..n)
                .map(|t| {
                    let a = rate * t as f32;
                    let (s, c) = a.sin_cos();
                    tex.render_warp(w, h, |x, y| {
                        let (rx, ry) = (x - cx, y - cy);
                        (cx + c * rx - s * ry, cy + s * rx + c * ry)
                    })
                })
                .collect()
        }
        ClipKind::Tracking => {
            let subject = Texture::noise(seed ^ 0x77, 256, 256);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1111);
            let speed: f32 = rng.gen_range(2.0..3.5);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            // Subject box is the middle 0.4 x 0.4 of the frame, covering the
            // classifier's center third with margin.
            let (sx0, sx1) = (w as f32 * 0.3, w as f32 * 0.7);
            let (sy0, sy1) = (h as f32 * 0.3, h as f32 * 0.7);
            (0..n)
                .map(|t| {
                    let off = sign * speed * t as f32;
                    let mut frame = tex.render(w, h, off, 0.0);
                    for y in sy0 as usize..sy1 as usize {
                        for x in sx0 as usize..sx1 as usize {
                            frame[y * w + x] =
                                (subject.sample(x as f32, y as f32) + 0.5) as u8;
                        }
                    }
                    frame
                })
                .collect()
        }
        ClipKind::Static => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2222);
            (0..n)
                .map(|_| {
                    let jx: f32 = rng.gen_range(-0.2..0.2);
                    let jy: f32 = rng.gen_range(-0.2..0.2);
                    tex.render(w, h, jx, jy)
                })
                .collect()
        }
        ClipKind::Crossfade => {
            let other = Texture::noise(seed ^ 0x9999, 512, 512).with_brightness(-110.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4444);
            let speed: f32 = rng.gen_range(1.5..3.0);
            let fade_start = n / 2;
            let fade_len = 1usize;
            (0..n)
                .map(|t| {
                    let a = tex.render(w, h, speed * t as f32, 0.0);
                    if t < fade_start {
                        a
                    } else if t >= fade_start + fade_len {
                        other.render(w, h, speed * t as f32, 0.0)
                    } else {
                        let alpha = (t - fade_start + 1) as f32 / (fade_len + 1) as f32;
                        let b = other.render(w, h, speed * t as f32, 0.0);
                        a.iter()
                            .zip(&b)
                            .map(|(&pa, &pb)| {
                                ((1.0 - alpha) * pa as f32 + alpha * pb as f32 + 0.5) as u8
                            })
                            .collect()
                    }
                })
                .collect()
        }
    }
}

/// Renders a clip straight into FrameBuffers.
pub fn render_clip_buffers(
    kind: ClipKind,
    seed: u64,
    w: usize,
    h: usize,
    n: usize,
    fps: f64,
) -> Vec<FrameBuffer> {
    to_buffers(render_clip(kind, seed, w, h, n), w, h, fps)
}

/// Writes gray frames out as a mono Y4M file.
pub fn write_y4m_gray(
    path: &Path,
    frames: &[Vec<u8>],
    w: usize,
    h: usize,
    fps_num: u32,
    fps_den: u32,
) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut writer = y4m::Writer::new(
        BufWriter::new(file),
        y4m::Header {
            width: w,
            height: h,
            fps_num,
            fps_den,
            colorspace: y4m::ColorSpace::Mono,
        },
    )?;
    for f in frames {
        writer.write_gray(f)?;
    }
    writer.finish()?;
    Ok(())
}

/// Writes RGB frames out as a 4:4:4 Y4M file.
pub fn write_y4m_rgb(
    path: &Path,
    frames: &[Vec<u8>],
    w: usize,
    h: usize,
    fps_num: u32,
    fps_den: u32,
) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut writer = y4m::Writer::new(
        BufWriter::new(file),
        y4m::Header {
            width: w,
            height: h,
            fps_num,
            fps_den,
            colorspace: y4m::ColorSpace::C444,
        },
    )?;
    for f in frames {
        writer.write_rgb(f)?;
    }
    writer.finish()?;
    Ok(())
}

// --- color test cards -------------------------------------------------

/// Uniform mid-gray RGB frame.
pub fn rgb_flat_gray(w: usize, h: usize) -> Vec<u8> {
    vec![128u8; w * h * 3]
}

/// Fully saturated hue wheel around the frame center.
pub fn rgb_color_wheel(w: usize, h: usize) -> Vec<u8> {
    let (cx, cy) = (w as f32 / 2.0, h as f32 / 2.0);
    let mut out = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let hue = (y as f32 - cy).atan2(x as f32 - cx) / std::f32::consts::TAU + 0.5;
            let [r, g, b] = hsv_to_rgb(hue, 1.0, 1.0);
            let i = (y * w + x) * 3;
            out[i] = r;
            out[i + 1] = g;
            out[i + 2] = b;
        }
    }
    out
}

/// 1-pixel black/white checkerboard, the sharpest 8-bit image possible.
pub fn rgb_checkerboard(w: usize, h: usize) -> Vec<u8> {
    let mut out = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let v = if (x + y) % 2 == 0 { 255 } else { 0 };
            let i = (y * w + x) * 3;
            out[i] = v;
            out[i + 1] = v;
            out[i + 2] = v;
        }
    }
    out
}

/// Colorful seeded-noise RGB frame, a stand-in for ordinary footage.
pub fn rgb_noise(seed: u64, w: usize, h: usize) -> Vec<u8> {
    let r = Texture::noise(seed, 256, 256);
    let g = Texture::noise(seed ^ 1, 256, 256);
    let b = Texture::noise(seed ^ 2, 256, 256);
    let mut out = vec![0u8; w * h * 3];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) * 3;
            out[i] = (r.sample(x as f32, y as f32) + 0.5) as u8;
            out[i + 1] = (g.sample(x as f32, y as f32) + 0.5) as u8;
            out[i + 2] = (b.sample(x as f32, y as f32) + 0.5) as u8;
        }
    }
    out
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> [u8; 3] {
    let h = (h.fract() + 1.0).fract() * 6.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [
        ((r + m) * 255.0 + 0.5) as u8,
        ((g + m) * 255.0 + 0.5) as u8,
        ((b + m) * 255.0 + 0.5) as u8,
    ]
}
