use serde::{Deserialize, Serialize};

use super::linalg::{dot, symmetric_eigen};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Relative eigenvalue cutoff below which a component counts as null.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// `k` orthonormal rows of length `dim`.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (divisor `n - 1`) along each component.
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
    /// Number of components with non-negligible variance.
    pub rank: usize,
    /// Set when fewer than `k` components carry variance. The remaining
    /// rows still complete an orthonormal basis, with variance 0.
    pub rank_deficient: bool,
}

impl PcaResult {
    /// Scores `[n, k]` of `data` on the components.
    pub fn project(&self, data: &Tensor) -> Result<Vec<Vec<f64>>> {
        let (_, d) = data.dims2().ok_or_else(|| Error::structural("pca", "data must be 2-D"))?;
        if d != self.mean.len() {
            return Err(Error::structural("pca", format!("data width {d} vs {}", self.mean.len())));
        }
        Ok(data
            .rows()
            .map(|row| {
                let centered: Vec<f64> = row.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
                self.components.iter().map(|c| dot(c, &centered)).collect()
            })
            .collect())
    }
}

/// Principal components of the rows of `data` (mean-centered, covariance
/// with divisor `n - 1`). Each component's largest-magnitude entry is made
/// positive.
pub fn pca(data: &Tensor, k: usize) -> Result<PcaResult> {
    let (n, d) = data.dims2().ok_or_else(|| Error::structural("pca", "data must be 2-D"))?;
    if k == 0 || k > d || n < k || n < 2 {
        return Err(Error::Validation(format!("pca needs rows >= k >= 1, k <= dim and rows >= 2 (rows {n}, dim {d}, k {k})")));
    }
    let mut mean = vec![0.0; d];
    for row in data.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for row in data.rows() {
        for j in 0..d {
            centered[j] = row[j] - mean[j];
        }
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            for j in i..d {
                cov[i * d + j] += ci * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n - 1) as f64;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let (values, vectors) = symmetric_eigen(&cov, d);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let rank = values.iter().filter(|&&v| v > RANK_TOL * top && v > 0.0).count();
    let components: Vec<Vec<f64>> = vectors
        .into_iter()
        .take(k)
        .map(|mut v| {
            let lead = v.iter().enumerate().fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
            if v[lead] < 0.0 {
                for x in &mut v {
                    *x = -*x;
                }
            }
            v
        })
        .collect();
    let explained_variance = values
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &v)| if i < rank { v } else { 0.0 })
        .collect();
    Ok(PcaResult {
        components,
        explained_variance,
        mean,
        rank,
        rank_deficient: rank < k,
    })
}
