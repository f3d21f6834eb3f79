use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::correlation::spearman;
use crate::canon::fmt_f64;
use crate::error::{Error, Result};
use crate::stimuli::{max_regularity, OddballTrial, QuadrilateralCategory, TRIAL_SIZE};

/// Categories need at least this many trials to enter a curve.
pub const MIN_TRIALS_PER_CATEGORY: usize = 20;

/// Index of the row farthest (Euclidean) from the mean of the six rows;
/// ties go to the lowest index.
pub fn oddball_pick(rows: &[&[f64]]) -> Result<usize> {
    if rows.len() != TRIAL_SIZE {
        return Err(Error::structural("oddball_pick", format!("expected {TRIAL_SIZE} rows, got {}", rows.len())));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::structural("oddball_pick", "rows differ in length"));
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= TRIAL_SIZE as f64;
    }
    let mut best = 0;
    let mut best_dist = f64::NEG_INFINITY;
    for (i, r) in rows.iter().enumerate() {
        let dist = r.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>().sqrt();
        if dist > best_dist {
            best = i;
            best_dist = dist;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryErrorRate {
    pub name: String,
    pub regularity_score: u8,
    pub error_rate: f64,
    pub trial_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityCurve {
    /// In catalog order (or first-seen order without a catalog).
    pub categories: Vec<CategoryErrorRate>,
    /// Least-squares slope of error rate against `max_score - regularity`.
    pub slope: f64,
    /// Categories left out, with the reason.
    pub warnings: Vec<String>,
}

impl RegularityCurve {
    /// Spearman correlation of error rate with `max_score - regularity`.
    pub fn irregularity_spearman(&self) -> f64 {
        let max = max_regularity() as f64;
        let x: Vec<f64> = self.categories.iter().map(|c| max - c.regularity_score as f64).collect();
        let y: Vec<f64> = self.categories.iter().map(|c| c.error_rate).collect();
        spearman(&x, &y)
    }

    /// `category,regularity_score,error_rate,trial_count`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,regularity_score,error_rate,trial_count\n");
        for c in &self.categories {
            let _ = writeln!(out, "{},{},{},{}", c.name, c.regularity_score, fmt_f64(c.error_rate), c.trial_count);
        }
        out
    }
}

/// Per-category error rates of the centroid rule. `picks[i]` is the chosen
/// position for `trials[i]`. Catalog categories without trials are left out
/// with a warning; categories below the minimum trial count are an error.
pub fn error_rates_by_category(
    trials: &[OddballTrial],
    picks: &[usize],
    catalog: &[QuadrilateralCategory],
) -> Result<RegularityCurve> {
    if trials.len() != picks.len() {
        return Err(Error::structural("error_rates_by_category", "one pick per trial required"));
    }
    let mut order: Vec<String> = catalog.iter().map(|c| c.name.clone()).collect();
    let mut tally: BTreeMap<String, (u8, usize, usize)> = BTreeMap::new();
    for (t, &p) in trials.iter().zip(picks) {
        let name = &t.category.name;
        if !order.contains(name) {
            order.push(name.clone());
        }
        let e = tally.entry(name.clone()).or_insert((t.category.regularity_score, 0, 0));
        e.1 += 1;
        if p != t.oddball_index {
            e.2 += 1;
        }
    }
    let mut categories = Vec::new();
    let mut warnings = Vec::new();
    for name in order {
        match tally.get(&name) {
            None => warnings.push(format!("category {name} has no trials; excluded")),
            Some(&(score, count, errors)) => {
                if count < MIN_TRIALS_PER_CATEGORY {
                    return Err(Error::Validation(format!(
                        "category {name} has {count} trials; at least {MIN_TRIALS_PER_CATEGORY} required"
                    )));
                }
                categories.push(CategoryErrorRate {
                    name,
                    regularity_score: score,
                    error_rate: errors as f64 / count as f64,
                    trial_count: count,
                });
            }
        }
    }
    let max = max_regularity() as f64;
    let x: Vec<f64> = categories.iter().map(|c| max - c.regularity_score as f64).collect();
    let y: Vec<f64> = categories.iter().map(|c| c.error_rate).collect();
    Ok(RegularityCurve {
        slope: ols_slope(&x, &y),
        categories,
        warnings,
    })
}

/// Simple-regression slope; 0 when `x` has no spread.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.is_empty() {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}
