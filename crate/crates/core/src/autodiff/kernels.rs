//! Matrix kernels with a fixed accumulation order.
//!
//! Each output entry accumulates its products in ascending order of the
//! contracted index, starting from +0.0. The inner loops run over output
//! columns, which vectorizes without reassociating any sum, so results are
//! bit-identical regardless of SIMD width. Zero left operands are skipped;
//! adding `0 * b` to an accumulator that started at +0.0 never changes it for
//! finite `b`.

/// `c[m,n] = a[m,k] * b[k,n]`
pub fn matmul_nn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (kk, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            for (cj, &bj) in crow.iter_mut().zip(brow) {
                *cj += aik * bj;
            }
        }
    }
    c
}

/// `c[m,n] = a[m,k] * b[n,k]ᵀ`
pub fn matmul_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let bt = transpose(b, n, k);
    matmul_nn(a, &bt, m, k, n)
}

/// `c[k,n] = a[m,k]ᵀ * g[m,n]`
pub fn matmul_tn(a: &[f64], g: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; k * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let grow = &g[i * n..(i + 1) * n];
        for (kk, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let crow = &mut c[kk * n..(kk + 1) * n];
            for (cj, &gj) in crow.iter_mut().zip(grow) {
                *cj += aik * gj;
            }
        }
    }
    c
}

/// Transpose of a row-major `[rows, cols]` matrix.
pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}
