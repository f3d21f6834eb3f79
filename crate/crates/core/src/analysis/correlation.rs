use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::regularity::RegularityCurve;
use crate::error::{Error, Result};

/// Pearson correlation; NaN when either side has no spread.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "pearson needs equal lengths");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// 1-based ranks, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCorrelation {
    pub pearson: f64,
    pub spearman: f64,
    pub shared: Vec<String>,
    /// Model categories absent from the external table.
    pub missing_external: Vec<String>,
    /// External categories absent from the model curve.
    pub missing_model: Vec<String>,
}

/// Correlate model error rates with an external `(category, error_rate)`
/// table over the categories both contain.
pub fn correlate_error_profiles(curve: &RegularityCurve, external: &[(String, f64)]) -> Result<ProfileCorrelation> {
    let ext: BTreeMap<&str, f64> = external.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let mut shared = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut missing_external = Vec::new();
    for c in &curve.categories {
        match ext.get(c.name.as_str()) {
            Some(&v) => {
                shared.push(c.name.clone());
                x.push(c.error_rate);
                y.push(v);
            }
            None => missing_external.push(c.name.clone()),
        }
    }
    let missing_model = external
        .iter()
        .filter(|(n, _)| !curve.categories.iter().any(|c| &c.name == n))
        .map(|(n, _)| n.clone())
        .collect();
    if shared.len() < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 shared categories, found {}",
            shared.len()
        )));
    }
    Ok(ProfileCorrelation {
        pearson: pearson(&x, &y),
        spearman: spearman(&x, &y),
        shared,
        missing_external,
        missing_model,
    })
}
