//! Small dense linear algebra on row-major `Vec<f64>` matrices.

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric `n x n` matrix by cyclic Jacobi
/// rotations. Returns eigenvalues in descending order and the matching
/// eigenvectors as rows.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(a.len(), n * n, "matrix is not n x n");
    let mut m = a.to_vec();
    // v holds eigenvectors as columns
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (values, vectors)
}

/// Least-squares solution of `X b = y` for `X` with `rows >= cols`, by
/// Householder QR. Fails when `X` is numerically rank deficient.
pub fn least_squares(x: &[f64], rows: usize, cols: usize, y: &[f64]) -> Result<Vec<f64>> {
    let (coef, dropped) = householder(x, rows, cols, y, true)?;
    debug_assert!(dropped.is_empty());
    Ok(coef)
}

/// Like [`least_squares`], but a column that is numerically a combination of
/// earlier columns is dropped (coefficient 0) instead of failing. Returns the
/// coefficients and the dropped column indices.
pub fn least_squares_dropping(x: &[f64], rows: usize, cols: usize, y: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    householder(x, rows, cols, y, false)
}

fn householder(x: &[f64], rows: usize, cols: usize, y: &[f64], strict: bool) -> Result<(Vec<f64>, Vec<usize>)> {
    if x.len() != rows * cols || y.len() != rows {
        return Err(Error::structural("least_squares", "dimension mismatch"));
    }
    if rows < cols {
        return Err(Error::Validation(format!("least squares needs rows >= cols ({rows} < {cols})")));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    let norm_scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    // (column, pivot row, alpha) for every kept column
    let mut kept: Vec<(usize, usize, f64)> = Vec::with_capacity(cols);
    let mut dropped = Vec::new();
    let mut r = 0;
    for k in 0..cols {
        let norm: f64 = (r..rows).map(|i| a[i * cols + k].powi(2)).sum::<f64>().sqrt();
        if norm <= 1e-12 * norm_scale * (rows as f64).sqrt() {
            if strict {
                return Err(Error::Validation("design matrix is rank deficient".into()));
            }
            dropped.push(k);
            continue;
        }
        let alpha = if a[r * cols + k] > 0.0 { -norm } else { norm };
        // Householder vector u = x - alpha e1, stored in column k from row r down
        a[r * cols + k] -= alpha;
        let unorm2: f64 = (r..rows).map(|i| a[i * cols + k].powi(2)).sum();
        for j in k + 1..cols {
            let dot: f64 = (r..rows).map(|i| a[i * cols + k] * a[i * cols + j]).sum();
            let f = 2.0 * dot / unorm2;
            for i in r..rows {
                a[i * cols + j] -= f * a[i * cols + k];
            }
        }
        let dot: f64 = (r..rows).map(|i| a[i * cols + k] * b[i]).sum();
        let f = 2.0 * dot / unorm2;
        for i in r..rows {
            b[i] -= f * a[i * cols + k];
        }
        kept.push((k, r, alpha));
        r += 1;
    }
    let mut coef = vec![0.0; cols];
    for idx in (0..kept.len()).rev() {
        let (k, row, alpha) = kept[idx];
        let mut s = b[row];
        for &(j, _, _) in &kept[idx + 1..] {
            s -= a[row * cols + j] * coef[j];
        }
        coef[k] = s / alpha;
    }
    Ok((coef, dropped))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
