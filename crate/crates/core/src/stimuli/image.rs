use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major grayscale image with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrayscaleImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayscaleImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Validation(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Validation(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(GrayscaleImage { width, height, pixels })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Binary PGM (P5, maxval 255), pixel byte = round(value * 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|p| (p * 255.0).round() as u8));
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_pgm())?;
        Ok(())
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Validation(format!("malformed PGM: {m}"));
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "255" {
            return Err(bad("expected P5 with maxval 255"));
        }
        let w: usize = fields[1].parse().map_err(|_| bad("width"))?;
        let h: usize = fields[2].parse().map_err(|_| bad("height"))?;
        let body = bytes.get(pos..pos + w * h).ok_or_else(|| bad("short body"))?;
        GrayscaleImage::new(w, h, body.iter().map(|&b| f64::from(b) / 255.0).collect())
    }
}

/// Render a `canvas x canvas` image with 2x2 supersampling: each pixel is
/// `intensity` times the fraction of its four sample points for which
/// `inside` holds, clamped to `[0, 1]`.
pub fn rasterize(canvas: usize, intensity: f64, inside: impl Fn(f64, f64) -> bool) -> GrayscaleImage {
    const OFFSETS: [f64; 2] = [0.25, 0.75];
    let mut pixels = Vec::with_capacity(canvas * canvas);
    for py in 0..canvas {
        for px in 0..canvas {
            let mut hits = 0u32;
            for oy in OFFSETS {
                for ox in OFFSETS {
                    if inside(px as f64 + ox, py as f64 + oy) {
                        hits += 1;
                    }
                }
            }
            let v = intensity * f64::from(hits) / 4.0;
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    GrayscaleImage {
        width: canvas,
        height: canvas,
        pixels,
    }
}
