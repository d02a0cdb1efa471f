//! Weighted V-statistic kernels shared by the unconditional and conditional measures.
//!
//! For a pairwise matrix `A` on X, `B` on Y and a probability vector `w` over
//! the sample rows, the signed measure `v = sum_i w_i delta_(x_i, y_i) -
//! (sum_i w_i delta_x_i)(sum_k w_k delta_y_k)` integrates `A(x, x') B(y, y')`
//! against `v x v'` to a closed form in matrix-vector products.

use nalgebra::{DMatrix, DVector};

/// `w1' (A o B) w2 - w1'[(A w2) o (B w2)] - w2'[(A w1) o (B w1)] + (w1' A w2)(w1' B w2)`.
pub fn cross_term(a: &DMatrix<f64>, b: &DMatrix<f64>, w1: &[f64], w2: &[f64]) -> f64 {
    let n = a.nrows();
    let w1v = DVector::from_column_slice(w1);
    let w2v = DVector::from_column_slice(w2);
    let aw1 = a * &w1v;
    let bw1 = b * &w1v;
    let aw2 = a * &w2v;
    let bw2 = b * &w2v;
    let mut joint = 0.0;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            col += w1[i] * a[(i, j)] * b[(i, j)];
        }
        joint += col * w2[j];
    }
    let mixed12: f64 = (0..n).map(|i| w1[i] * aw2[i] * bw2[i]).sum();
    let mixed21: f64 = (0..n).map(|i| w2[i] * aw1[i] * bw1[i]).sum();
    let product = w1v.dot(&aw2) * w1v.dot(&bw2);
    joint - mixed12 - mixed21 + product
}

/// `w'(A o B)w - 2 w'[(A w) o (B w)] + (w' A w)(w' B w)`: the `w1 = w2` case of
/// [`cross_term`], with half the work.
pub fn self_term(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = a.nrows();
    let wv = DVector::from_column_slice(w);
    let aw = a * &wv;
    let bw = b * &wv;
    let mut joint = 0.0;
    for j in 0..n {
        if w[j] == 0.0 {
            continue;
        }
        let mut col = 0.0;
        for i in 0..n {
            col += w[i] * a[(i, j)] * b[(i, j)];
        }
        joint += col * w[j];
    }
    let mixed: f64 = (0..n).map(|i| w[i] * aw[i] * bw[i]).sum();
    joint - 2.0 * mixed + wv.dot(&aw) * wv.dot(&bw)
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}
