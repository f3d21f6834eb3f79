use serde::{Deserialize, Serialize};

use super::image::{rasterize, GrayscaleImage};
use crate::error::{Error, Result};

/// Largest latent value any renderer accepts (out-of-distribution headroom).
pub const LATENT_CAP: f64 = 1.5;
pub const MIN_CANVAS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentFeatures {
    /// Normalized disc radius.
    pub size: f64,
    /// Normalized interior intensity.
    pub luminosity: f64,
}

impl LatentFeatures {
    pub fn new(size: f64, luminosity: f64) -> Self {
        LatentFeatures { size, luminosity }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.size, self.luminosity]
    }

    pub fn distance(&self, other: &LatentFeatures) -> f64 {
        (self.size - other.size).hypot(self.luminosity - other.luminosity)
    }
}

/// Radius in pixels: from 0.1 canvas at size 0 to 0.4 canvas at size 1.
pub fn disc_radius(size: f64, canvas: usize) -> f64 {
    let c = canvas as f64;
    let (r_min, r_max) = (0.1 * c, 0.4 * c);
    r_min + size * (r_max - r_min)
}

/// Interior intensity before clamping: 0.2 at luminosity 0, 1.0 at 1.
pub fn disc_intensity(luminosity: f64) -> f64 {
    0.2 + 0.8 * luminosity
}

/// Centered filled disc on a black canvas.
///
/// Intensities above 1 (luminosity > 1) saturate when clamped to the pixel
/// range.
pub fn render_parametric_shape(latents: LatentFeatures, canvas: usize) -> Result<GrayscaleImage> {
    if canvas < MIN_CANVAS {
        return Err(Error::Validation(format!("canvas must be >= {MIN_CANVAS}, got {canvas}")));
    }
    for (name, v) in [("size", latents.size), ("luminosity", latents.luminosity)] {
        if !(0.0..=LATENT_CAP).contains(&v) {
            return Err(Error::Validation(format!("{name} {v} outside [0, {LATENT_CAP}]")));
        }
    }
    let r = disc_radius(latents.size, canvas);
    let c = canvas as f64 / 2.0;
    let r2 = r * r;
    Ok(rasterize(canvas, disc_intensity(latents.luminosity), |x, y| {
        let (dx, dy) = (x - c, y - c);
        dx * dx + dy * dy <= r2
    }))
}
