//! Dense helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par;

/// Column block width for [`matmul`]. Fixed so results never depend on the thread count.
const BLOCK: usize = 64;

/// `a * b`, splitting the columns of `b` into fixed-width blocks that may run in parallel.
pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let cols = b.ncols();
    let blocks = cols.div_ceil(BLOCK);
    if blocks <= 1 {
        return a * b;
    }
    let parts = par::map_range(blocks, |k| {
        let start = k * BLOCK;
        let width = BLOCK.min(cols - start);
        a * b.columns(start, width)
    });
    let mut out = DMatrix::zeros(a.nrows(), cols);
    for (k, part) in parts.into_iter().enumerate() {
        out.columns_mut(k * BLOCK, part.ncols()).copy_from(&part);
    }
    out
}

/// `sum_ij a_ij b_ji`, i.e. `Tr(a b)`, without forming the product.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// `k H` with `H = (1/n)(I - (1/n) 1 1')`: subtract each row's mean, then scale by `1/n`.
pub fn right_center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.ncols();
    let nf = n as f64;
    let mut out = k.clone();
    for i in 0..k.nrows() {
        let mean = k.row(i).sum() / nf;
        for j in 0..n {
            out[(i, j)] = (k[(i, j)] - mean) / nf;
        }
    }
    out
}

/// `H m`: subtract each column's mean, then scale by `1/n`.
pub fn left_center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nf = n as f64;
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let mean = m.column(j).sum() / nf;
        for i in 0..n {
            out[(i, j)] = (m[(i, j)] - mean) / nf;
        }
    }
    out
}

/// The centering matrix `H = (1/n)(I - (1/n) 1 1')`.
pub fn centering(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |i, j| ((i == j) as u8 as f64 - 1.0 / nf) / nf)
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let x = a.lu().solve(b).ok_or_else(|| Error::numerical("singular system in regularized solve"))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::numerical("non-finite solution in regularized solve"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::{with_policy, Parallelism};

    #[test]
    fn blocked_matmul_matches_plain() {
        let a = DMatrix::from_fn(70, 90, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let b = DMatrix::from_fn(90, 150, |i, j| ((i * 5 + j) % 13) as f64 * 0.5);
        let plain = &a * &b;
        let blocked = matmul(&a, &b);
        assert!((plain - &blocked).abs().max() < 1e-9);
        let seq = with_policy(Parallelism::Sequential, || matmul(&a, &b));
        assert_eq!(seq, blocked);
    }

    #[test]
    fn centering_helpers_agree_with_matrix() {
        let k = DMatrix::from_fn(6, 6, |i, j| (i as f64 + 1.0) * (j as f64 - 2.5).powi(2));
        let h = centering(6);
        assert!((right_center(&k) - &k * &h).abs().max() < 1e-13);
        assert!((left_center(&k) - &h * &k).abs().max() < 1e-13);
        // H^2 = H / n
        assert!((&h * &h - &h / 6.0).abs().max() < 1e-15);
    }
}
