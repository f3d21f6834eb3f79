use serde::{Deserialize, Serialize};

use super::linalg::least_squares_dropping;
use super::pca::pca;
use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::rng::{permutation, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodingConfig {
    pub n_folds: usize,
    pub max_components: usize,
    /// Logistic regression: full-batch gradient descent steps and rate.
    pub classifier_steps: usize,
    pub classifier_learning_rate: f64,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        DecodingConfig {
            n_folds: 20,
            max_components: 50,
            classifier_steps: 500,
            classifier_learning_rate: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodingReport {
    pub target: String,
    pub n_components_used: usize,
    pub n_folds: usize,
    /// R² (regression) or accuracy (classification) per held-out fold.
    pub fold_scores: Vec<f64>,
    pub mean_score: f64,
}

impl DecodingReport {
    fn new(target: &str, k: usize, fold_scores: Vec<f64>) -> Self {
        let mean_score = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        DecodingReport {
            target: target.to_string(),
            n_components_used: k,
            n_folds: fold_scores.len(),
            fold_scores,
            mean_score,
        }
    }
}

/// Fold of every row: a seeded shuffle cut into `n_folds` contiguous
/// blocks, the first `n % n_folds` blocks one row longer.
pub fn fold_assignment(n: usize, n_folds: usize, seed: u64) -> Vec<usize> {
    let order = permutation(n, &mut stream(seed, "decoding/folds", 0));
    let base = n / n_folds;
    let extra = n % n_folds;
    let mut fold = vec![0; n];
    let mut pos = 0;
    for f in 0..n_folds {
        let len = base + usize::from(f < extra);
        for &row in &order[pos..pos + len] {
            fold[row] = f;
        }
        pos += len;
    }
    fold
}

/// Scores on the first `min(max_components, rank)` principal components.
fn leading_scores(embeddings: &Tensor, max_components: usize) -> Result<(Vec<Vec<f64>>, usize)> {
    let (n, d) = embeddings
        .dims2()
        .ok_or_else(|| Error::structural("decoding", "embeddings must be 2-D"))?;
    let fit = pca(embeddings, max_components.min(d).min(n))?;
    let k = fit.rank.min(fit.components.len());
    if k == 0 {
        return Err(Error::Validation("embeddings have no variance".into()));
    }
    let mut scores = fit.project(embeddings)?;
    for row in &mut scores {
        row.truncate(k);
    }
    Ok((scores, k))
}

fn check_folds(n: usize, cfg: &DecodingConfig) -> Result<()> {
    if cfg.n_folds < 2 || cfg.n_folds > n {
        return Err(Error::Validation(format!("n_folds must lie in [2, rows] (got {})", cfg.n_folds)));
    }
    if cfg.max_components == 0 {
        return Err(Error::Validation("max_components must be positive".into()));
    }
    Ok(())
}

/// Cross-validated OLS R² of a scalar target from leading principal
/// components. Components that are degenerate within a training fold (say,
/// nonzero only on held-out rows) are left out of that fold's fit. A fold whose targets are constant scores 1 if predicted
/// exactly and 0 otherwise.
pub fn regularity_decoding(embeddings: &Tensor, targets: &[f64], cfg: &DecodingConfig, seed: u64) -> Result<DecodingReport> {
    let n = targets.len();
    if embeddings.dims2().map(|d| d.0) != Some(n) {
        return Err(Error::structural("regularity_decoding", "one target per embedding row required"));
    }
    if n < 200 {
        return Err(Error::Validation(format!("regularity decoding needs >= 200 rows, got {n}")));
    }
    if targets.iter().all(|t| *t == targets[0]) {
        return Err(Error::Validation("regularity target is constant".into()));
    }
    check_folds(n, cfg)?;
    let (scores, k) = leading_scores(embeddings, cfg.max_components)?;
    let folds = fold_assignment(n, cfg.n_folds, seed);
    let mut fold_scores = Vec::with_capacity(cfg.n_folds);
    for f in 0..cfg.n_folds {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
        let mut design = Vec::with_capacity(train.len() * (k + 1));
        for &i in &train {
            design.push(1.0);
            design.extend_from_slice(&scores[i]);
        }
        let y: Vec<f64> = train.iter().map(|&i| targets[i]).collect();
        let (coef, _) = least_squares_dropping(&design, train.len(), k + 1, &y)?;
        let predict = |i: usize| coef[0] + coef[1..].iter().zip(&scores[i]).map(|(c, s)| c * s).sum::<f64>();
        let mean = test.iter().map(|&i| targets[i]).sum::<f64>() / test.len() as f64;
        let sse: f64 = test.iter().map(|&i| (targets[i] - predict(i)).powi(2)).sum();
        let sst: f64 = test.iter().map(|&i| (targets[i] - mean).powi(2)).sum();
        fold_scores.push(if sst > 0.0 {
            1.0 - sse / sst
        } else if sse == 0.0 {
            1.0
        } else {
            0.0
        });
    }
    Ok(DecodingReport::new("regularity", k, fold_scores))
}

/// Cross-validated accuracy of multinomial logistic regression on leading
/// principal components. Features are standardized with training-fold
/// statistics; weights start at zero and follow plain gradient descent on
/// the mean cross-entropy. Predicted class is the arg-max, ties to the
/// lowest label.
pub fn category_decoding(embeddings: &Tensor, labels: &[usize], cfg: &DecodingConfig, seed: u64) -> Result<DecodingReport> {
    let n = labels.len();
    if embeddings.dims2().map(|d| d.0) != Some(n) {
        return Err(Error::structural("category_decoding", "one label per embedding row required"));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Validation("category decoding needs at least two classes".into()));
    }
    for &c in &classes {
        let count = labels.iter().filter(|&&l| l == c).count();
        if count < 10 {
            return Err(Error::Validation(format!("class {c} has {count} rows; at least 10 required")));
        }
    }
    check_folds(n, cfg)?;
    let class_of: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).expect("present")).collect();
    let c = classes.len();
    let (scores, k) = leading_scores(embeddings, cfg.max_components)?;
    let folds = fold_assignment(n, cfg.n_folds, seed);
    let mut fold_scores = Vec::with_capacity(cfg.n_folds);
    for f in 0..cfg.n_folds {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
        let mut mean = vec![0.0; k];
        for &i in &train {
            for j in 0..k {
                mean[j] += scores[i][j];
            }
        }
        mean.iter_mut().for_each(|m| *m /= train.len() as f64);
        let mut sd = vec![0.0; k];
        for &i in &train {
            for j in 0..k {
                sd[j] += (scores[i][j] - mean[j]).powi(2);
            }
        }
        let sd: Vec<f64> = sd
            .iter()
            .map(|s| {
                let v = (s / train.len() as f64).sqrt();
                if v > 0.0 {
                    v
                } else {
                    1.0
                }
            })
            .collect();
        let standardize = |i: usize| -> Vec<f64> { (0..k).map(|j| (scores[i][j] - mean[j]) / sd[j]).collect() };
        let x = Tensor::from_rows(&train.iter().map(|&i| standardize(i)).collect::<Vec<_>>())?;
        let mut onehot = Tensor::zeros(vec![train.len(), c]);
        for (r, &i) in train.iter().enumerate() {
            onehot.data_mut()[r * c + class_of[i]] = 1.0;
        }
        let mut w = Tensor::zeros(vec![k, c]);
        let mut b = Tensor::zeros(vec![1, c]);
        for _ in 0..cfg.classifier_steps {
            let mut g = Graph::new();
            let wv = g.param(w.clone());
            let bv = g.param(b.clone());
            let xv = g.constant(x.clone());
            let yv = g.constant(onehot.clone());
            let z = g.matmul(xv, wv)?;
            let z = g.add(z, bv)?;
            let p = g.softmax_row(z)?;
            let floor = g.constant(Tensor::scalar(1e-300));
            let p = g.add(p, floor)?;
            let lp = g.log(p)?;
            let picked = g.mul(lp, yv)?;
            let per_row = g.sum_axis(picked, 1)?;
            let mean_ll = g.mean(per_row)?;
            let loss = g.scale(mean_ll, -1.0)?;
            let mut grads = g.backward(loss)?;
            let gw = grads.take(wv).expect("weights reach the loss");
            let gb = grads.take(bv).expect("bias reaches the loss");
            for (p, d) in w.data_mut().iter_mut().zip(gw.data()) {
                *p -= cfg.classifier_learning_rate * d;
            }
            for (p, d) in b.data_mut().iter_mut().zip(gb.data()) {
                *p -= cfg.classifier_learning_rate * d;
            }
        }
        let hits = test
            .iter()
            .filter(|&&i| {
                let xi = standardize(i);
                let logits: Vec<f64> = (0..c)
                    .map(|cls| b.data()[cls] + (0..k).map(|j| xi[j] * w.data()[j * c + cls]).sum::<f64>())
                    .collect();
                let best = logits
                    .iter()
                    .enumerate()
                    .fold(0, |best, (cls, v)| if *v > logits[best] { cls } else { best });
                best == class_of[i]
            })
            .count();
        fold_scores.push(hits as f64 / test.len() as f64);
    }
    Ok(DecodingReport::new("category", k, fold_scores))
}
