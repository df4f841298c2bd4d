//! Source probing and decoding into downscaled grayscale frame streams.
//!
//! `.y4m` files are decoded with the built-in reader. Anything else is
//! piped through `ffmpeg` (when present) emitting Y4M on stdout, so every
//! backend funnels through the same uncompressed frame contract.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::process::{Child, Command, Stdio};

use crate::y4m;

#[derive(Debug, thiserror::Error)]
pub enum MediaError {
    #[error("unreadable source {0}: {1}")]
    UnreadableSource(String, #[source] std::io::Error),
    #[error("undecodable stream {0}: {1}")]
    UndecodableStream(String, String),
    #[error("target height {0} below minimum 64")]
    TargetHeightTooSmall(u32),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct VideoMeta {
    pub source_id: String,
    pub path_or_uri: String,
    pub fps_num: u32,
    pub fps_den: u32,
    pub width: u32,
    pub height: u32,
    pub frame_count: u64,
    pub duration_s: f64,
}

impl VideoMeta {
    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }
}

/// One decoded, downscaled frame. `luma` is always present; `rgb` only
/// when the stream was opened with color retained.
#[derive(Debug, Clone)]
pub struct FrameBuffer {
    pub index: u64,
    pub timestamp_s: f64,
    pub width: u32,
    pub height: u32,
    pub luma: Vec<u8>,
    pub rgb: Option<Vec<u8>>,
}

impl FrameBuffer {
    pub fn mean_luma(&self) -> f64 {
        let sum: u64 = self.luma.iter().map(|&v| v as u64).sum();
        sum as f64 / self.luma.len() as f64
    }
}

fn source_id_for(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

fn is_y4m(path: &str) -> bool {
    path.to_ascii_lowercase().ends_with(".y4m")
}

fn ffmpeg_available() -> bool {
    Command::new("ffmpeg")
        .arg("-version")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

/// Probes a source for its exact fps, dimensions and frame count.
pub fn probe(source: &str) -> Result<VideoMeta, MediaError> {
    if is_y4m(source) {
        return probe_y4m(source);
    }
    if ffmpeg_available() {
        // Count frames by piping through the same decode path used later.
        let mut n = 0u64;
        let mut meta = None;
        let mut stream = open_ffmpeg_y4m(source)?;
        loop {
            match stream.reader.read_frame(false) {
                Ok(Some(_)) => n += 1,
                Ok(None) => break,
                Err(e) => {
                    return Err(MediaError::UndecodableStream(source.into(), e.to_string()))
                }
            }
            meta.get_or_insert_with(|| stream.reader.header.clone());
        }
        let header = meta.ok_or_else(|| {
            MediaError::UndecodableStream(source.into(), "no video frames".into())
        })?;
        return Ok(VideoMeta {
            source_id: source_id_for(source),
            path_or_uri: source.into(),
            fps_num: header.fps_num,
            fps_den: header.fps_den,
            width: header.width as u32,
            height: header.height as u32,
            frame_count: n,
            duration_s: n as f64 / header.fps(),
        });
    }
    Err(MediaError::UndecodableStream(
        source.into(),
        "not a .y4m file and no ffmpeg backend available".into(),
    ))
}

fn probe_y4m(source: &str) -> Result<VideoMeta, MediaError> {
    let file = File::open(source).map_err(|e| MediaError::UnreadableSource(source.into(), e))?;
    let mut reader = y4m::Reader::new(BufReader::new(file))
        .map_err(|e| MediaError::UndecodableStream(source.into(), e.to_string()))?;
    let header = reader.header.clone();
    let mut n = 0u64;
    loop {
        match reader.read_frame(false) {
            Ok(Some(_)) => n += 1,
            Ok(None) => break,
            Err(e) => return Err(MediaError::UndecodableStream(source.into(), e.to_string())),
        }
    }
    if n == 0 {
        return Err(MediaError::UndecodableStream(
            source.into(),
            "stream contains no frames".into(),
        ));
    }
    Ok(VideoMeta {
        source_id: source_id_for(source),
        path_or_uri: source.into(),
        fps_num: header.fps_num,
        fps_den: header.fps_den,
        width: header.width as u32,
        height: header.height as u32,
        frame_count: n,
        duration_s: n as f64 / header.fps(),
    })
}

struct Y4mSource {
    reader: y4m::Reader<Box<dyn BufRead + Send>>,
    child: Option<Child>,
}

fn open_ffmpeg_y4m(source: &str) -> Result<Y4mSource, MediaError> {
    let mut child = Command::new("ffmpeg")
        .args(["-nostdin", "-v", "error", "-i", source])
        .args(["-map", "0:v:0", "-f", "yuv4mpegpipe", "-pix_fmt", "yuv444p", "-"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| MediaError::UnreadableSource(source.into(), e))?;
    let stdout = child.stdout.take().expect("piped stdout");
    let reader: Box<dyn BufRead + Send> = Box::new(BufReader::new(stdout));
    let reader = y4m::Reader::new(reader)
        .map_err(|e| MediaError::UndecodableStream(source.into(), e.to_string()))?;
    Ok(Y4mSource { reader, child: Some(child) })
}

fn open_source(source: &str) -> Result<Y4mSource, MediaError> {
    if is_y4m(source) {
        let file =
            File::open(source).map_err(|e| MediaError::UnreadableSource(source.into(), e))?;
        let reader: Box<dyn BufRead + Send> = Box::new(BufReader::new(file));
        let reader = y4m::Reader::new(reader)
            .map_err(|e| MediaError::UndecodableStream(source.into(), e.to_string()))?;
        Ok(Y4mSource { reader, child: None })
    } else if ffmpeg_available() {
        open_ffmpeg_y4m(source)
    } else {
        Err(MediaError::UndecodableStream(
            source.into(),
            "not a .y4m file and no ffmpeg backend available".into(),
        ))
    }
}

/// Sequential iterator over the decoded, downscaled frames of one source.
pub struct FrameStream {
    inner: Y4mSource,
    meta: VideoMeta,
    out_w: u32,
    out_h: u32,
    keep_color: bool,
    next_index: u64,
    done: bool,
}

impl FrameStream {
    pub fn meta(&self) -> &VideoMeta {
        &self.meta
    }
    pub fn dimensions(&self) -> (u32, u32) {
        (self.out_w, self.out_h)
    }
}

/// Output width for an aspect-preserving scale to `target_height`,
/// rounded to the nearest even number.
pub fn scaled_width(src_w: u32, src_h: u32, target_height: u32) -> u32 {
    let w = src_w as f64 * target_height as f64 / src_h as f64;
    let even = ((w / 2.0) + 0.5).floor() as u32 * 2;
    even.max(2)
}

pub fn open_stream(
    meta: &VideoMeta,
    target_height: u32,
    keep_color: bool,
) -> Result<FrameStream, MediaError> {
    if target_height < 64 {
        return Err(MediaError::TargetHeightTooSmall(target_height));
    }
    let inner = open_source(&meta.path_or_uri)?;
    let out_h = target_height;
    let out_w = scaled_width(meta.width, meta.height, target_height);
    Ok(FrameStream {
        inner,
        meta: meta.clone(),
        out_w,
        out_h,
        keep_color,
        next_index: 0,
        done: false,
    })
}

impl Iterator for FrameStream {
    type Item = Result<FrameBuffer, MediaError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let want_rgb = self.keep_color;
        let src = &self.meta.path_or_uri;
        match self.inner.reader.read_frame(want_rgb) {
            Ok(None) => {
                self.done = true;
                if let Some(child) = self.inner.child.as_mut() {
                    let _ = child.wait();
                }
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(MediaError::UndecodableStream(src.clone(), e.to_string())))
            }
            Ok(Some(frame)) => {
                let (sw, sh) = (self.meta.width as usize, self.meta.height as usize);
                let (ow, oh) = (self.out_w as usize, self.out_h as usize);
                let luma = resample_area(&frame.luma, sw, sh, 1, ow, oh);
                let rgb = frame.rgb.map(|p| resample_area(&p, sw, sh, 3, ow, oh));
                let index = self.next_index;
                self.next_index += 1;
                Some(Ok(FrameBuffer {
                    index,
                    timestamp_s: index as f64 / self.meta.fps(),
                    width: self.out_w,
                    height: self.out_h,
                    luma,
                    rgb,
                }))
            }
        }
    }
}

/// Area-averaging resample of an interleaved `channels`-plane image.
/// Each destination pixel averages its exact fractional source box.
pub fn resample_area(
    src: &[u8],
    sw: usize,
    sh: usize,
    channels: usize,
    dw: usize,
    dh: usize,
) -> Vec<u8> {
    if sw == dw && sh == dh {
        return src.to_vec();
    }
    let sx = sw as f64 / dw as f64;
    let sy = sh as f64 / dh as f64;
    let mut out = vec![0u8; dw * dh * channels];
    for dy in 0..dh {
        let y0 = dy as f64 * sy;
        let y1 = (dy + 1) as f64 * sy;
        for dx in 0..dw {
            let x0 = dx as f64 * sx;
            let x1 = (dx + 1) as f64 * sx;
            for c in 0..channels {
                let mut acc = 0.0f64;
                let mut area = 0.0f64;
                let iy0 = y0.floor() as usize;
                let iy1 = (y1.ceil() as usize).min(sh);
                let ix0 = x0.floor() as usize;
                let ix1 = (x1.ceil() as usize).min(sw);
                for iy in iy0..iy1 {
                    let wy = (y1.min((iy + 1) as f64) - y0.max(iy as f64)).max(0.0);
                    for ix in ix0..ix1 {
                        let wx = (x1.min((ix + 1) as f64) - x0.max(ix as f64)).max(0.0);
                        let w = wx * wy;
                        acc += w * src[(iy * sw + ix) * channels + c] as f64;
                        area += w;
                    }
                }
                out[(dy * dw + dx) * channels + c] = ((acc / area) + 0.5).floor() as u8;
            }
        }
    }
    out
}

/// Parses a newline-delimited source manifest: one path/URI per line,
/// blank lines and `#` comments skipped.
pub fn read_source_manifest(path: &Path) -> Result<Vec<String>, MediaError> {
    let file = File::open(path)
        .map_err(|e| MediaError::UnreadableSource(path.display().to_string(), e))?;
    let mut text = String::new();
    BufReader::new(file)
        .read_to_string(&mut text)
        .map_err(|e| MediaError::UnreadableSource(path.display().to_string(), e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_width_preserves_aspect() {
        assert_eq!(scaled_width(1920, 1080, 270), 480);
        assert_eq!(scaled_width(1280, 720, 270), 480);
        assert_eq!(scaled_width(640, 480, 120), 160);
    }

    #[test]
    fn resample_identity() {
        let img: Vec<u8> = (0..16).collect();
        assert_eq!(resample_area(&img, 4, 4, 1, 4, 4), img);
    }

    #[test]
    fn resample_box_average() {
        // 4x4 halved: each output pixel is the mean of a 2x2 block.
        let img = vec![
            0, 0, 100, 100, //
            0, 0, 100, 100, //
            200, 200, 50, 50, //
            200, 200, 50, 50,
        ];
        assert_eq!(resample_area(&img, 4, 4, 1, 2, 2), vec![0, 100, 200, 50]);
    }

    #[test]
    fn manifest_skips_comments() {
        let dir = std::env::temp_dir().join("curate_manifest_test");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("sources.txt");
        std::fs::write(&p, "# header\n\n/a/b.y4m\n  /c/d.y4m  \n#tail\n").unwrap();
        let got = read_source_manifest(&p).unwrap();
        assert_eq!(got, vec!["/a/b.y4m".to_string(), "/c/d.y4m".to_string()]);
    }
}
