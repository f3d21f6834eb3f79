//! Six-image oddball trials built from the quadrilateral catalog.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::image::{rasterize, GrayscaleImage};
use super::quad::{is_simple, Point, QuadrilateralCategory};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream};

pub const TRIAL_SIZE: usize = 6;
pub const DEFAULT_PERTURBATION: f64 = 0.15;
const MAX_RESAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub scale: f64,
    /// Radians, counterclockwise.
    pub rotation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialConfig {
    pub canvas: usize,
    /// Oddball displacement as a fraction of the bounding-box diagonal.
    pub perturbation: f64,
    pub min_scale: f64,
    pub max_scale: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            canvas: 32,
            perturbation: DEFAULT_PERTURBATION,
            min_scale: 0.7,
            max_scale: 1.3,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.canvas < super::parametric::MIN_CANVAS {
            errs.push(format!("canvas >= 16 required (got {})", self.canvas));
        }
        if !(self.perturbation > 0.0 && self.perturbation < 1.0) {
            errs.push(format!("perturbation must lie in (0, 1) (got {})", self.perturbation));
        }
        if !(self.min_scale > 0.0 && self.min_scale <= self.max_scale && self.max_scale <= 1.3) {
            errs.push("scale range must satisfy 0 < min_scale <= max_scale <= 1.3".to_string());
        }
        errs
    }

    pub fn draw_transform(&self, rng: &mut crate::rng::Rng) -> Transform {
        let scale = if self.max_scale > self.min_scale {
            rng.gen_range(self.min_scale..self.max_scale)
        } else {
            self.min_scale
        };
        let rotation = rng.gen_range(0.0..std::f64::consts::TAU);
        Transform { scale, rotation }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OddballTrial {
    pub images: Vec<GrayscaleImage>,
    pub oddball_index: usize,
    pub category: QuadrilateralCategory,
    pub category_index: usize,
    /// Transforms of the five regular variants, in image order with the
    /// oddball slot skipped.
    pub variant_transforms: Vec<Transform>,
    pub oddball_transform: Transform,
    pub oddball_vertices: [Point; 4],
    pub perturbation_magnitude: f64,
}

impl OddballTrial {
    /// Image positions of the five regular variants.
    pub fn variant_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..TRIAL_SIZE).filter(move |&i| i != self.oddball_index)
    }
}

/// The vertex with the largest `x - y`; ties resolve to the lowest index.
pub fn bottom_right_index(v: &[Point; 4]) -> usize {
    let mut best = 0;
    for i in 1..4 {
        if v[i][0] - v[i][1] > v[best][0] - v[best][1] {
            best = i;
        }
    }
    best
}

fn bbox_diagonal(v: &[Point; 4]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in v {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (hi[0] - lo[0]).hypot(hi[1] - lo[1])
}

/// Displace the bottom-right vertex by `magnitude` times the bounding-box
/// diagonal in a seeded random direction, resampling the direction until
/// the quadrilateral stays simple.
pub fn make_oddball(category: &QuadrilateralCategory, magnitude: f64, seed: u64) -> Result<[Point; 4]> {
    if !(magnitude > 0.0) || !magnitude.is_finite() {
        return Err(Error::Validation(format!("perturbation magnitude must be positive, got {magnitude}")));
    }
    let base = category.canonical_vertices;
    let target = bottom_right_index(&base);
    let dist = magnitude * bbox_diagonal(&base);
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_RESAMPLES {
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut v = base;
        v[target] = [base[target][0] + dist * theta.cos(), base[target][1] + dist * theta.sin()];
        if is_simple(&v) {
            return Ok(v);
        }
    }
    Err(Error::Generation(format!(
        "{}: no simple perturbation after {MAX_RESAMPLES} draws",
        category.name
    )))
}

/// Fraction of the canvas covered by a unit-radius shape at scale 1.
const BASE_EXTENT: f64 = 0.28;

/// Scale, rotate and center `vertices` on the canvas, then fill at full
/// intensity. Shape y points up; image rows run down.
pub fn render_quadrilateral(vertices: &[Point; 4], transform: Transform, canvas: usize) -> GrayscaleImage {
    let c = canvas as f64 / 2.0;
    let k = transform.scale * BASE_EXTENT * canvas as f64;
    let (s, co) = transform.rotation.sin_cos();
    let pts: [Point; 4] = vertices.map(|p| {
        let x = co * p[0] - s * p[1];
        let y = s * p[0] + co * p[1];
        [c + k * x, c - k * y]
    });
    rasterize(canvas, 1.0, |x, y| {
        // even-odd crossing test
        let mut inside = false;
        let mut j = 3;
        for i in 0..4 {
            let (pi, pj) = (pts[i], pts[j]);
            if (pi[1] > y) != (pj[1] > y) {
                let xc = pj[0] + (y - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
                if x < xc {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    })
}

/// One trial: five variants of the category and one perturbed oddball, each
/// with its own size/rotation draw, the oddball at a uniform position.
pub fn build_oddball_trial(
    category: &QuadrilateralCategory,
    category_index: usize,
    config: &TrialConfig,
    seed: u64,
) -> Result<OddballTrial> {
    let errs = config.validate();
    if !errs.is_empty() {
        return Err(Error::Validation(errs.join("; ")));
    }
    let mut rng = rng_from_seed(seed);
    let oddball_index = rng.gen_range(0..TRIAL_SIZE);
    let variant_transforms: Vec<Transform> = (0..TRIAL_SIZE - 1).map(|_| config.draw_transform(&mut rng)).collect();
    let oddball_transform = config.draw_transform(&mut rng);
    let oddball_vertices = make_oddball(category, config.perturbation, derive_seed(seed, "oddball/perturb", 0))?;

    let mut variants = variant_transforms.iter();
    let images = (0..TRIAL_SIZE)
        .map(|i| {
            if i == oddball_index {
                render_quadrilateral(&oddball_vertices, oddball_transform, config.canvas)
            } else {
                let t = variants.next().expect("five variants");
                render_quadrilateral(&category.canonical_vertices, *t, config.canvas)
            }
        })
        .collect();
    Ok(OddballTrial {
        images,
        oddball_index,
        category: category.clone(),
        category_index,
        variant_transforms,
        oddball_transform,
        oddball_vertices,
        perturbation_magnitude: config.perturbation,
    })
}

/// `n_trials` trials cycling through the catalog (trial `i` uses category
/// `i mod len`), each seeded from `(master_seed, label, i)`.
pub fn build_trial_set(
    catalog: &[QuadrilateralCategory],
    n_trials: usize,
    config: &TrialConfig,
    master_seed: u64,
    label: &str,
) -> Result<Vec<OddballTrial>> {
    if catalog.is_empty() {
        return Err(Error::Validation("empty catalog".into()));
    }
    (0..n_trials)
        .map(|i| {
            let k = i % catalog.len();
            build_oddball_trial(&catalog[k], k, config, derive_seed(master_seed, label, i as u64))
        })
        .collect()
}

/// Extra renders of a shape under fresh transforms (contrastive views).
pub fn render_views(vertices: &[Point; 4], n: usize, config: &TrialConfig, seed: u64) -> Vec<(Transform, GrayscaleImage)> {
    let mut rng = stream(seed, "views", 0);
    (0..n)
        .map(|_| {
            let t = config.draw_transform(&mut rng);
            (t, render_quadrilateral(vertices, t, config.canvas))
        })
        .collect()
}
