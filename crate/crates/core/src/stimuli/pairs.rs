//! Size/luminosity pair datasets with an out-of-distribution band.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::image::GrayscaleImage;
use super::parametric::{render_parametric_shape, LatentFeatures, LATENT_CAP};
use crate::error::{Error, Result};
use crate::rng::{permutation, stream};

/// Which split a stimulus or pair belongs to. Training code only ever takes
/// gradients through `Train` records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Ood,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Ood => "ood",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Stimulus {
    pub id: usize,
    pub latents: LatentFeatures,
    pub split: Split,
    pub image: GrayscaleImage,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    pub target: f64,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairConfig {
    /// Grid points per latent dimension over `[0, 1]`.
    pub grid: usize,
    /// Width of the out-of-distribution band above 1.
    pub ood_band: f64,
    pub canvas: usize,
    /// Fraction of in-distribution grid points held out for testing.
    pub test_fraction: f64,
    /// Number of sampled test pairs and of sampled OOD pairs.
    pub eval_pairs: usize,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            grid: 12,
            ood_band: 0.3,
            canvas: 32,
            test_fraction: 0.2,
            eval_pairs: 512,
        }
    }
}

impl PairConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.grid < 4 {
            errs.push(format!("grid >= 4 required (got {})", self.grid));
        }
        if !(self.ood_band > 0.0 && self.ood_band <= 0.5) {
            errs.push(format!("ood_band must lie in (0, 0.5] (got {})", self.ood_band));
        }
        if self.canvas < super::parametric::MIN_CANVAS {
            errs.push(format!("canvas >= 16 required (got {})", self.canvas));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            errs.push(format!("test_fraction must lie in (0, 1) (got {})", self.test_fraction));
        }
        if self.eval_pairs == 0 {
            errs.push("eval_pairs must be positive".to_string());
        }
        errs
    }
}

pub const IN_DISTRIBUTION_NORMALIZER: f64 = std::f64::consts::SQRT_2;

/// `1 - |z_a - z_b| / normalizer`.
pub fn target_similarity(a: &LatentFeatures, b: &LatentFeatures, normalizer: f64) -> f64 {
    1.0 - a.distance(b) / normalizer
}

#[derive(Clone, Debug)]
pub struct PairDataset {
    pub config: PairConfig,
    /// Distance normalizer shared by every split: sqrt(2) * (1 + ood_band).
    pub normalizer: f64,
    pub stimuli: Vec<Stimulus>,
    pub train: Vec<Pair>,
    pub test: Vec<Pair>,
    pub ood: Vec<Pair>,
}

impl PairDataset {
    pub fn ids_in(&self, split: Split) -> Vec<usize> {
        self.stimuli.iter().filter(|s| s.split == split).map(|s| s.id).collect()
    }

    pub fn pairs(&self, split: Split) -> &[Pair] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
            Split::Ood => &self.ood,
        }
    }
}

/// Build train / in-distribution test / OOD pair sets.
///
/// In-distribution latents sit on a `grid x grid` lattice over `[0, 1]^2`,
/// partitioned by a seeded shuffle into train and test points. OOD latents
/// continue the same lattice spacing past 1 (up to `1 + ood_band`, or a
/// single level at `1 + ood_band` when the band is narrower than one step)
/// in at least one dimension. Training pairs are every unordered pair of training
/// points (self-pairs included); test pairs join a test point with any
/// in-distribution point; OOD pairs join an OOD point with any point.
pub fn build_similarity_pairs(config: &PairConfig, seed: u64) -> Result<PairDataset> {
    let errs = config.validate();
    if !errs.is_empty() {
        return Err(Error::Validation(errs.join("; ")));
    }
    let step = 1.0 / (config.grid - 1) as f64;
    let hi = 1.0 + config.ood_band;
    let mut values: Vec<f64> = (0..config.grid).map(|k| k as f64 * step).collect();
    let mut k = config.grid;
    while k as f64 * step <= hi + 1e-9 {
        values.push(k as f64 * step);
        k += 1;
    }
    if values.len() == config.grid {
        // band narrower than one lattice step: a single OOD level at the band edge
        values.push(hi);
    }
    if values.iter().any(|&v| v > LATENT_CAP) {
        return Err(Error::Validation("OOD band exceeds latent cap".into()));
    }

    let mut in_dist = Vec::new();
    let mut ood = Vec::new();
    for (i, &zi) in values.iter().enumerate() {
        for (j, &zj) in values.iter().enumerate() {
            let z = LatentFeatures::new(zi, zj);
            if i < config.grid && j < config.grid {
                in_dist.push(z);
            } else {
                ood.push(z);
            }
        }
    }

    let n_test = ((in_dist.len() as f64 * config.test_fraction).round() as usize).clamp(1, in_dist.len() - 1);
    let order = permutation(in_dist.len(), &mut stream(seed, "pairs/split", 0));
    let mut is_test = vec![false; in_dist.len()];
    for &k in &order[..n_test] {
        is_test[k] = true;
    }

    let mut stimuli = Vec::with_capacity(in_dist.len() + ood.len());
    let mut push = |z: LatentFeatures, split: Split| -> Result<()> {
        let id = stimuli.len();
        stimuli.push(Stimulus {
            id,
            latents: z,
            split,
            image: render_parametric_shape(z, config.canvas)?,
        });
        Ok(())
    };
    for (k, z) in in_dist.iter().enumerate() {
        push(*z, if is_test[k] { Split::Test } else { Split::Train })?;
    }
    for z in &ood {
        push(*z, Split::Ood)?;
    }

    let normalizer = IN_DISTRIBUTION_NORMALIZER * hi;
    let by_split = |s: Split| -> Vec<usize> { stimuli.iter().filter(|x| x.split == s).map(|x| x.id).collect() };
    let (train_ids, test_ids, ood_ids) = (by_split(Split::Train), by_split(Split::Test), by_split(Split::Ood));
    let make = |a: usize, b: usize, split: Split| Pair {
        a,
        b,
        target: target_similarity(&stimuli[a].latents, &stimuli[b].latents, normalizer),
        split,
    };

    let mut train = Vec::new();
    for (x, &a) in train_ids.iter().enumerate() {
        for &b in &train_ids[x..] {
            train.push(make(a, b, Split::Train));
        }
    }

    let id_pool: Vec<usize> = train_ids.iter().chain(&test_ids).copied().collect();
    let all_pool: Vec<usize> = (0..stimuli.len()).collect();
    let sample = |anchors: &[usize], partners: &[usize], split: Split, label: &str| -> Vec<Pair> {
        let mut rng = stream(seed, label, 0);
        (0..config.eval_pairs)
            .map(|_| {
                let a = anchors[rng.gen_range(0..anchors.len())];
                let b = partners[rng.gen_range(0..partners.len())];
                make(a, b, split)
            })
            .collect()
    };
    let test = sample(&test_ids, &id_pool, Split::Test, "pairs/test");
    let ood_pairs = sample(&ood_ids, &all_pool, Split::Ood, "pairs/ood");

    Ok(PairDataset {
        config: config.clone(),
        normalizer,
        stimuli,
        train,
        test,
        ood: ood_pairs,
    })
}
