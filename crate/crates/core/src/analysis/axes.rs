use serde::{Deserialize, Serialize};

use super::linalg::{dot, least_squares, norm};
use super::pca::pca;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::stimuli::LatentFeatures;

/// Principal components used to fit each latent direction.
pub const AXIS_COMPONENTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionAxes {
    /// Unit direction in embedding space that best predicts size.
    pub size_axis: Vec<f64>,
    pub luminosity_axis: Vec<f64>,
    /// Angle between the two axes in degrees, in `[0, 90]`.
    pub angle_degrees: f64,
    pub components_used: usize,
}

/// OLS of each latent on the leading principal components; each
/// coefficient vector is mapped back to embedding space and normalized.
pub fn dimension_axes(embeddings: &Tensor, latents: &[LatentFeatures]) -> Result<DimensionAxes> {
    let (n, d) = embeddings
        .dims2()
        .ok_or_else(|| Error::structural("dimension_axes", "embeddings must be 2-D"))?;
    if n != latents.len() {
        return Err(Error::structural("dimension_axes", format!("{n} embeddings for {} latents", latents.len())));
    }
    if n < 10 {
        return Err(Error::Validation(format!("dimension_axes needs >= 10 rows, got {n}")));
    }
    let columns = [
        ("size", latents.iter().map(|z| z.size).collect::<Vec<_>>()),
        ("luminosity", latents.iter().map(|z| z.luminosity).collect::<Vec<_>>()),
    ];
    for (name, col) in &columns {
        if col.iter().all(|v| *v == col[0]) {
            return Err(Error::Validation(format!("latent column {name} is constant")));
        }
    }
    let fit = pca(embeddings, AXIS_COMPONENTS.min(d).min(n - 1))?;
    let k = fit.rank.min(fit.components.len());
    if k == 0 {
        return Err(Error::Validation("embeddings have no variance".into()));
    }
    let scores = fit.project(embeddings)?;
    let mut design = Vec::with_capacity(n * (k + 1));
    for row in &scores {
        design.push(1.0);
        design.extend_from_slice(&row[..k]);
    }
    let mut axes = Vec::new();
    for (_, y) in &columns {
        let coef = least_squares(&design, n, k + 1, y)?;
        let mut axis = vec![0.0; d];
        for (c, comp) in coef[1..].iter().zip(&fit.components) {
            for (a, v) in axis.iter_mut().zip(comp) {
                *a += c * v;
            }
        }
        let len = norm(&axis);
        if len == 0.0 {
            return Err(Error::Validation("latent is not linearly predictable".into()));
        }
        axes.push(axis.into_iter().map(|a| a / len).collect::<Vec<_>>());
    }
    let cos = dot(&axes[0], &axes[1]).abs().min(1.0);
    let luminosity_axis = axes.pop().expect("two axes");
    let size_axis = axes.pop().expect("two axes");
    Ok(DimensionAxes {
        size_axis,
        luminosity_axis,
        angle_degrees: cos.acos().to_degrees(),
        components_used: k,
    })
}
