//! Sparse grid optical flow via pyramidal Lucas-Kanade.
//!
//! The estimator tracks a regular grid of points between adjacent frames.
//! Points with a weak normal matrix, a large final residual, or a
//! displacement leaving the frame are masked invalid and excluded from
//! every downstream statistic.

use crate::media::FrameBuffer;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub grid_spacing: u32,
    pub pyramid_levels: u32,
    pub window: u32,
    pub max_iters: u32,
    pub residual_max: f64,
    pub min_eig: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            grid_spacing: 16,
            pyramid_levels: 3,
            window: 15,
            max_iters: 20,
            residual_max: 10.0,
            min_eig: 1e-3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("frame dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("invalid flow config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone)]
pub struct FlowField {
    pub width: u32,
    pub height: u32,
    pub grid_spacing: u32,
    pub points: Vec<(f32, f32)>,
    pub vectors: Vec<(f32, f32)>,
    pub valid: Vec<bool>,
    /// Mean absolute window residual per point, gray levels.
    pub residuals: Vec<f32>,
}

impl FlowField {
    pub fn valid_vectors(&self) -> impl Iterator<Item = (f32, f32)> + '_ {
        self.vectors
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|(&v, _)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowStats {
    pub mean_vector: (f64, f64),
    pub mean_magnitude: f64,
    pub p95_magnitude: f64,
    pub valid_fraction: f64,
}

struct Gray {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Gray {
    fn from_luma(luma: &[u8], w: usize, h: usize) -> Self {
        Gray { w, h, data: luma.iter().map(|&v| v as f32).collect() }
    }

    fn get(&self, x: i64, y: i64) -> f32 {
        let x = x.clamp(0, self.w as i64 - 1) as usize;
        let y = y.clamp(0, self.h as i64 - 1) as usize;
        self.data[y * self.w + x]
    }

    fn bilinear(&self, x: f32, y: f32) -> f32 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as i64, y0 as i64);
        let a = self.get(x0, y0);
        let b = self.get(x0 + 1, y0);
        let c = self.get(x0, y0 + 1);
        let d = self.get(x0 + 1, y0 + 1);
        a + fx * (b - a) + fy * (c - a) + fx * fy * (a - b - c + d)
    }

    fn half(&self) -> Gray {
        let w = (self.w / 2).max(1);
        let h = (self.h / 2).max(1);
        let mut data = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = (2 * x as i64, 2 * y as i64);
                data[y * w + x] = 0.25
                    * (self.get(sx, sy)
                        + self.get(sx + 1, sy)
                        + self.get(sx, sy + 1)
                        + self.get(sx + 1, sy + 1));
            }
        }
        Gray { w, h, data }
    }
}

fn build_pyramid(frame: &FrameBuffer, levels: u32) -> Vec<Gray> {
    let mut pyr = vec![Gray::from_luma(
        &frame.luma,
        frame.width as usize,
        frame.height as usize,
    )];
    for _ in 1..levels {
        pyr.push(pyr.last().unwrap().half());
    }
    pyr
}

/// Estimates displacement at grid points from `prev` to `next`.
pub fn estimate_flow(
    prev: &FrameBuffer,
    next: &FrameBuffer,
    cfg: &FlowConfig,
) -> Result<FlowField, FlowError> {
    if prev.width != next.width || prev.height != next.height {
        return Err(FlowError::DimensionMismatch(
            prev.width,
            prev.height,
            next.width,
            next.height,
        ));
    }
    if cfg.pyramid_levels < 1 {
        return Err(FlowError::InvalidConfig("pyramid_levels must be >= 1".into()));
    }
    if cfg.window % 2 == 0 || cfg.window < 3 {
        return Err(FlowError::InvalidConfig("window must be odd and >= 3".into()));
    }
    let radius = (cfg.window / 2) as i64;
    let (w, h) = (prev.width as i64, prev.height as i64);
    let margin = radius + 1;

    let mut points = Vec::new();
    let mut y = margin;
    while y < h - margin {
        let mut x = margin;
        while x < w - margin {
            points.push((x as f32, y as f32));
            x += cfg.grid_spacing as i64;
        }
        y += cfg.grid_spacing as i64;
    }

    let prev_pyr = build_pyramid(prev, cfg.pyramid_levels);
    let next_pyr = build_pyramid(next, cfg.pyramid_levels);

    let mut vectors = Vec::with_capacity(points.len());
    let mut valid = Vec::with_capacity(points.len());
    let mut residuals = Vec::with_capacity(points.len());
    for &(px, py) in &points {
        let (v, ok, res) = track_point(px, py, &prev_pyr, &next_pyr, cfg, radius as i32);
        vectors.push(v);
        valid.push(ok);
        residuals.push(res);
    }

    Ok(FlowField {
        width: prev.width,
        height: prev.height,
        grid_spacing: cfg.grid_spacing,
        points,
        vectors,
        valid,
        residuals,
    })
}

fn track_point(
    px: f32,
    py: f32,
    prev_pyr: &[Gray],
    next_pyr: &[Gray],
    cfg: &FlowConfig,
    radius: i32,
) -> ((f32, f32), bool, f32) {
    let levels = prev_pyr.len();
    let mut gu = 0.0f32;
    let mut gv = 0.0f32;
    let mut ok = true;
    let mut residual = f32::MAX;

    for level in (0..levels).rev() {
        let scale = (1 << level) as f32;
        let prev = &prev_pyr[level];
        let next = &next_pyr[level];
        let cx = px / scale;
        let cy = py / scale;

        // Spatial gradients of the template window in the previous frame.
        let n = ((2 * radius + 1) * (2 * radius + 1)) as usize;
        let mut ix = vec![0.0f32; n];
        let mut iy = vec![0.0f32; n];
        let mut tmpl = vec![0.0f32; n];
        let mut k = 0;
        let mut gxx = 0.0f32;
        let mut gxy = 0.0f32;
        let mut gyy = 0.0f32;
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let sx = cx + dx as f32;
                let sy = cy + dy as f32;
                tmpl[k] = prev.bilinear(sx, sy);
                let dxv = 0.5 * (prev.bilinear(sx + 1.0, sy) - prev.bilinear(sx - 1.0, sy));
                let dyv = 0.5 * (prev.bilinear(sx, sy + 1.0) - prev.bilinear(sx, sy - 1.0));
                ix[k] = dxv;
                iy[k] = dyv;
                gxx += dxv * dxv;
                gxy += dxv * dyv;
                gyy += dyv * dyv;
                k += 1;
            }
        }
        // Smaller eigenvalue of the normal matrix, normalized per pixel.
        let tr = gxx + gyy;
        let det = gxx * gyy - gxy * gxy;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let min_eig = (tr / 2.0 - disc) / n as f32;
        if (min_eig as f64) < cfg.min_eig {
            ok = false;
            break;
        }
        let det = (gxx as f64) * (gyy as f64) - (gxy as f64) * (gxy as f64);
        if det.abs() < 1e-12 {
            ok = false;
            break;
        }

        let mut u = gu;
        let mut v = gv;
        for _ in 0..cfg.max_iters {
            let mut bx = 0.0f32;
            let mut by = 0.0f32;
            let mut k = 0;
            let mut abs_err = 0.0f32;
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let sx = cx + u + dx as f32;
                    let sy = cy + v + dy as f32;
                    let diff = tmpl[k] - next.bilinear(sx, sy);
                    abs_err += diff.abs();
                    bx += diff * ix[k];
                    by += diff * iy[k];
                    k += 1;
                }
            }
            residual = abs_err / n as f32;
            let du = ((gyy as f64 * bx as f64 - gxy as f64 * by as f64) / det) as f32;
            let dv = ((gxx as f64 * by as f64 - gxy as f64 * bx as f64) / det) as f32;
            u += du;
            v += dv;
            if du * du + dv * dv < 1e-4 {
                break;
            }
        }
        gu = u;
        gv = v;
        if level > 0 {
            gu *= 2.0;
            gv *= 2.0;
        }
    }

    let base = &next_pyr[0];
    let tx = px + gu;
    let ty = py + gv;
    if tx < 0.0 || ty < 0.0 || tx >= base.w as f32 || ty >= base.h as f32 {
        ok = false;
    }
    if (residual as f64) > cfg.residual_max {
        ok = false;
    }
    ((gu, gv), ok, residual)
}

/// Statistics over the valid points of a field; a field with no valid
/// points yields all-zero stats with valid_fraction 0.
pub fn flow_stats(field: &FlowField) -> FlowStats {
    let mut mags: Vec<f64> = Vec::new();
    let mut su = 0.0f64;
    let mut sv = 0.0f64;
    for (u, v) in field.valid_vectors() {
        su += u as f64;
        sv += v as f64;
        mags.push(((u as f64).powi(2) + (v as f64).powi(2)).sqrt());
    }
    let n = mags.len();
    if n == 0 {
        return FlowStats {
            mean_vector: (0.0, 0.0),
            mean_magnitude: 0.0,
            p95_magnitude: 0.0,
            valid_fraction: 0.0,
        };
    }
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p95_idx = (((n as f64) * 0.95).ceil() as usize).clamp(1, n) - 1;
    FlowStats {
        mean_vector: (su / n as f64, sv / n as f64),
        mean_magnitude: mags.iter().sum::<f64>() / n as f64,
        p95_magnitude: mags[p95_idx],
        valid_fraction: n as f64 / field.valid.len() as f64,
    }
}

/// Mean flow magnitude split into the frame's center (middle 1/3 x 1/3)
/// and everything outside it. NaN-free: empty regions report 0.
pub fn region_magnitudes(field: &FlowField) -> (f64, f64) {
    let (w, h) = (field.width as f32, field.height as f32);
    let (x0, x1) = (w / 3.0, 2.0 * w / 3.0);
    let (y0, y1) = (h / 3.0, 2.0 * h / 3.0);
    let mut center = (0.0f64, 0usize);
    let mut border = (0.0f64, 0usize);
    for ((&(px, py), &(u, v)), &ok) in field
        .points
        .iter()
        .zip(&field.vectors)
        .zip(&field.valid)
    {
        if !ok {
            continue;
        }
        let mag = ((u as f64).powi(2) + (v as f64).powi(2)).sqrt();
        if px >= x0 && px < x1 && py >= y0 && py < y1 {
            center.0 += mag;
            center.1 += 1;
        } else {
            border.0 += mag;
            border.1 += 1;
        }
    }
    let avg = |(s, n): (f64, usize)| if n == 0 { 0.0 } else { s / n as f64 };
    (avg(center), avg(border))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn frame_from(luma: Vec<u8>, w: u32, h: u32) -> FrameBuffer {
        FrameBuffer {
            index: 0,
            timestamp_s: 0.0,
            width: w,
            height: h,
            luma,
            rgb: None,
        }
    }

    #[test]
    fn identical_frames_zero_motion() {
        let tex = synth::Texture::noise(7, 512, 512);
        let f = frame_from(tex.render(160, 120, 0.0, 0.0), 160, 120);
        let field = estimate_flow(&f, &f, &FlowConfig::default()).unwrap();
        let stats = flow_stats(&field);
        assert!(stats.mean_magnitude < 0.1, "got {}", stats.mean_magnitude);
        assert!(stats.valid_fraction > 0.9);
    }

    #[test]
    fn recovers_integer_shift() {
        let tex = synth::Texture::noise(11, 512, 512);
        let a = frame_from(tex.render(160, 120, 0.0, 0.0), 160, 120);
        let b = frame_from(tex.render(160, 120, 3.0, 0.0), 160, 120);
        let stats = flow_stats(&estimate_flow(&a, &b, &FlowConfig::default()).unwrap());
        assert!((stats.mean_vector.0 - 3.0).abs() < 0.5, "{:?}", stats.mean_vector);
        assert!(stats.mean_vector.1.abs() < 0.5);
        assert!(stats.valid_fraction >= 0.8);
    }

    #[test]
    fn recovers_negative_shift() {
        let tex = synth::Texture::noise(13, 512, 512);
        let a = frame_from(tex.render(160, 120, 0.0, 0.0), 160, 120);
        let b = frame_from(tex.render(160, 120, -2.0, 1.0), 160, 120);
        let stats = flow_stats(&estimate_flow(&a, &b, &FlowConfig::default()).unwrap());
        assert!((stats.mean_vector.0 + 2.0).abs() < 0.5);
        assert!((stats.mean_vector.1 - 1.0).abs() < 0.5);
    }

    #[test]
    fn antisymmetry_on_translation() {
        let tex = synth::Texture::noise(17, 512, 512);
        let a = frame_from(tex.render(160, 120, 0.0, 0.0), 160, 120);
        let b = frame_from(tex.render(160, 120, 4.0, -2.0), 160, 120);
        let cfg = FlowConfig::default();
        let fwd = flow_stats(&estimate_flow(&a, &b, &cfg).unwrap());
        let bwd = flow_stats(&estimate_flow(&b, &a, &cfg).unwrap());
        assert!((fwd.mean_vector.0 + bwd.mean_vector.0).abs() < 0.5);
        assert!((fwd.mean_vector.1 + bwd.mean_vector.1).abs() < 0.5);
    }

    #[test]
    fn constant_frame_all_invalid() {
        let a = frame_from(vec![128; 160 * 120], 160, 120);
        let field = estimate_flow(&a, &a, &FlowConfig::default()).unwrap();
        let stats = flow_stats(&field);
        assert_eq!(stats.valid_fraction, 0.0);
        assert_eq!(stats.mean_magnitude, 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = frame_from(vec![0; 100 * 80], 100, 80);
        let b = frame_from(vec![0; 80 * 100], 80, 100);
        assert!(matches!(
            estimate_flow(&a, &b, &FlowConfig::default()),
            Err(FlowError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn grid_density_consistency() {
        let tex = synth::Texture::noise(19, 512, 512);
        let a = frame_from(tex.render(200, 150, 0.0, 0.0), 200, 150);
        let b = frame_from(tex.render(200, 150, 2.0, 2.0), 200, 150);
        let coarse = flow_stats(
            &estimate_flow(&a, &b, &FlowConfig { grid_spacing: 16, ..Default::default() }).unwrap(),
        );
        let dense = flow_stats(
            &estimate_flow(&a, &b, &FlowConfig { grid_spacing: 8, ..Default::default() }).unwrap(),
        );
        let rel = (coarse.mean_magnitude - dense.mean_magnitude).abs() / dense.mean_magnitude;
        assert!(rel < 0.05, "rel diff {rel}");
    }

    #[test]
    fn stats_hand_values() {
        let field = FlowField {
            width: 100,
            height: 100,
            grid_spacing: 16,
            points: vec![(20.0, 20.0), (40.0, 20.0)],
            vectors: vec![(1.0, 0.0), (-1.0, 0.0)],
            valid: vec![true, true],
            residuals: vec![0.0, 0.0],
        };
        let s = flow_stats(&field);
        assert_eq!(s.mean_vector, (0.0, 0.0));
        assert_eq!(s.mean_magnitude, 1.0);

        let field345 = FlowField {
            vectors: vec![(3.0, 4.0); 2],
            valid: vec![true; 2],
            residuals: vec![0.0; 2],
            points: vec![(20.0, 20.0), (40.0, 20.0)],
            ..field
        };
        assert_eq!(flow_stats(&field345).mean_magnitude, 5.0);
    }

    #[test]
    fn triangle_inequality_holds() {
        let tex = synth::Texture::noise(23, 512, 512);
        let a = frame_from(tex.render(160, 120, 0.0, 0.0), 160, 120);
        let b = frame_from(tex.render(160, 120, 1.5, -0.5), 160, 120);
        let s = flow_stats(&estimate_flow(&a, &b, &FlowConfig::default()).unwrap());
        let norm = (s.mean_vector.0.powi(2) + s.mean_vector.1.powi(2)).sqrt();
        assert!(s.mean_magnitude >= norm - 1e-9);
    }
}
