//! Minimal YUV4MPEG2 reader/writer.
//!
//! Supports mono, 4:2:0 and 4:4:4 streams, which covers the decoder
//! contract: backends hand us uncompressed planes over a pipe or file.

use std::io::{self, BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Mono,
    C420,
    C444,
}

#[derive(Debug, Clone)]
pub struct Header {
    pub width: usize,
    pub height: usize,
    pub fps_num: u32,
    pub fps_den: u32,
    pub colorspace: ColorSpace,
}

impl Header {
    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }

    fn frame_bytes(&self) -> usize {
        let luma = self.width * self.height;
        match self.colorspace {
            ColorSpace::Mono => luma,
            ColorSpace::C420 => luma + 2 * (self.width.div_ceil(2) * self.height.div_ceil(2)),
            ColorSpace::C444 => 3 * luma,
        }
    }
}

/// One decoded frame: full-size luma plane plus optional interleaved RGB.
pub struct Frame {
    pub luma: Vec<u8>,
    pub rgb: Option<Vec<u8>>,
}

pub struct Reader<R: BufRead> {
    inner: R,
    pub header: Header,
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

impl<R: BufRead> Reader<R> {
    pub fn new(mut inner: R) -> io::Result<Self> {
        let mut line = Vec::new();
        inner.read_until(b'\n', &mut line)?;
        if line.last() == Some(&b'\n') {
            line.pop();
        }
        let line = String::from_utf8(line).map_err(|_| bad("y4m header not utf-8"))?;
        let mut parts = line.split(' ');
        if parts.next() != Some("YUV4MPEG2") {
            return Err(bad("missing YUV4MPEG2 magic"));
        }
        let (mut width, mut height, mut fps_num, mut fps_den) = (0usize, 0usize, 0u32, 0u32);
        let mut colorspace = ColorSpace::C420;
        for p in parts {
            let (tag, val) = p.split_at(1);
            match tag {
                "W" => width = val.parse().map_err(|_| bad("bad W tag"))?,
                "H" => height = val.parse().map_err(|_| bad("bad H tag"))?,
                "F" => {
                    let (n, d) = val.split_once(':').ok_or_else(|| bad("bad F tag"))?;
                    fps_num = n.parse().map_err(|_| bad("bad F tag"))?;
                    fps_den = d.parse().map_err(|_| bad("bad F tag"))?;
                }
                "C" => {
                    colorspace = if val == "mono" {
                        ColorSpace::Mono
                    } else if val.starts_with("420") {
                        ColorSpace::C420
                    } else if val.starts_with("444") {
                        ColorSpace::C444
                    } else {
                        return Err(bad(format!("unsupported colorspace {val}")));
                    };
                }
                _ => {}
            }
        }
        if width == 0 || height == 0 || fps_num == 0 || fps_den == 0 {
            return Err(bad("incomplete y4m header"));
        }
        Ok(Reader {
            inner,
            header: Header { width, height, fps_num, fps_den, colorspace },
        })
    }

    /// Reads the next frame; `Ok(None)` at clean end of stream.
    pub fn read_frame(&mut self, want_rgb: bool) -> io::Result<Option<Frame>> {
        let mut line = Vec::new();
        let n = self.inner.read_until(b'\n', &mut line)?;
        if n == 0 {
            return Ok(None);
        }
        if !line.starts_with(b"FRAME") {
            return Err(bad("expected FRAME marker"));
        }
        let mut buf = vec![0u8; self.header.frame_bytes()];
        self.inner.read_exact(&mut buf)?;
        let luma_len = self.header.width * self.header.height;
        let luma = buf[..luma_len].to_vec();
        let rgb = if want_rgb {
            Some(self.to_rgb(&buf))
        } else {
            None
        };
        Ok(Some(Frame { luma, rgb }))
    }

    fn to_rgb(&self, planes: &[u8]) -> Vec<u8> {
        let (w, h) = (self.header.width, self.header.height);
        let luma_len = w * h;
        let mut rgb = vec![0u8; luma_len * 3];
        match self.header.colorspace {
            ColorSpace::Mono => {
                for i in 0..luma_len {
                    let y = planes[i];
                    rgb[3 * i] = y;
                    rgb[3 * i + 1] = y;
                    rgb[3 * i + 2] = y;
                }
            }
            ColorSpace::C444 => {
                for i in 0..luma_len {
                    let (y, cb, cr) = (planes[i], planes[luma_len + i], planes[2 * luma_len + i]);
                    let px = ycbcr_to_rgb(y, cb, cr);
                    rgb[3 * i..3 * i + 3].copy_from_slice(&px);
                }
            }
            ColorSpace::C420 => {
                let cw = w.div_ceil(2);
                let ch = h.div_ceil(2);
                let cb_plane = &planes[luma_len..luma_len + cw * ch];
                let cr_plane = &planes[luma_len + cw * ch..];
                for yy in 0..h {
                    for xx in 0..w {
                        let i = yy * w + xx;
                        let ci = (yy / 2).min(ch - 1) * cw + (xx / 2).min(cw - 1);
                        let px = ycbcr_to_rgb(planes[i], cb_plane[ci], cr_plane[ci]);
                        rgb[3 * i..3 * i + 3].copy_from_slice(&px);
                    }
                }
            }
        }
        rgb
    }
}

/// BT.601 full-range YCbCr -> RGB.
fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    let y = y as f64;
    let cb = cb as f64 - 128.0;
    let cr = cr as f64 - 128.0;
    let clamp = |v: f64| (v + 0.5).floor().clamp(0.0, 255.0) as u8;
    [
        clamp(y + 1.402 * cr),
        clamp(y - 0.344136 * cb - 0.714136 * cr),
        clamp(y + 1.772 * cb),
    ]
}

/// BT.601 luma from RGB, round-half-up integer arithmetic.
pub fn bt601_luma(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

/// RGB -> full-range BT.601 YCbCr.
fn rgb_to_ycbcr(r: u8, g: u8, b: u8) -> [u8; 3] {
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let clamp = |v: f64| (v + 0.5).floor().clamp(0.0, 255.0) as u8;
    [
        clamp(0.299 * r + 0.587 * g + 0.114 * b),
        clamp(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b),
        clamp(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b),
    ]
}

pub struct Writer<W: Write> {
    inner: W,
    header: Header,
}

impl<W: Write> Writer<W> {
    pub fn new(mut inner: W, header: Header) -> io::Result<Self> {
        let cs = match header.colorspace {
            ColorSpace::Mono => "mono",
            ColorSpace::C420 => "420jpeg",
            ColorSpace::C444 => "444",
        };
        writeln!(
            inner,
            "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C{}",
            header.width, header.height, header.fps_num, header.fps_den, cs
        )?;
        Ok(Writer { inner, header })
    }

    pub fn write_gray(&mut self, luma: &[u8]) -> io::Result<()> {
        assert_eq!(self.header.colorspace, ColorSpace::Mono);
        assert_eq!(luma.len(), self.header.width * self.header.height);
        self.inner.write_all(b"FRAME\n")?;
        self.inner.write_all(luma)
    }

    pub fn write_rgb(&mut self, rgb: &[u8]) -> io::Result<()> {
        assert_eq!(self.header.colorspace, ColorSpace::C444);
        let n = self.header.width * self.header.height;
        assert_eq!(rgb.len(), n * 3);
        let mut planes = vec![0u8; n * 3];
        for i in 0..n {
            let [y, cb, cr] = rgb_to_ycbcr(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
            planes[i] = y;
            planes[n + i] = cb;
            planes[2 * n + i] = cr;
        }
        self.inner.write_all(b"FRAME\n")?;
        self.inner.write_all(&planes)
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}
