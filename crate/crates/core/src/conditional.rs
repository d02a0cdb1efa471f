//! Conditional dependence measures built from smoothing weights.
//!
//! * [`gcdcov_at`] / [`hscic_at`]: the distance and kernel forms of the
//!   pointwise measure at one weight vector. For matched distance/kernel pairs
//!   they agree exactly.
//! * [`avg_hscic`] / [`avg_gcdcov`]: the pointwise measure averaged over the
//!   observed conditioning points.
//! * [`h_hat`] and [`hscic_vstat`]: the cross term between two conditioning
//!   points, and its `k_Z`-weighted double average, the smoothed V-statistic
//!   of the squared HS norm of the conditional cross-covariance operator with
//!   `Z` appended to `X`.
//!
//! The matrix realizations cost `O(n^3)`: every sum over sample indices is
//! folded into an `n x n` matrix product against the weight matrix.

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{distance_matrix, gram_matrix, KernelSpec, SemimetricSpec};
use crate::linalg::matmul;
use crate::measure::MeasureResult;
use crate::par;
use crate::smoothing::{weight_matrix, ConditionalWeightMatrix, SmoothingSpec};
use crate::vstat::{cross_term, self_term};

/// Tolerance on `|sum w - 1|` for caller-supplied weight vectors.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-8;

pub fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::input(format!("weight vector has length {}, dataset has {n} rows", w.len())));
    }
    if let Some(i) = w.iter().position(|v| v.is_nan() || *v < 0.0 || !v.is_finite()) {
        return Err(Error::input(format!("weight {i} is {} (weights must be finite and >= 0)", w[i])));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::input(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn pair_grams(kx: &KernelSpec, ky: &KernelSpec, d: &Dataset) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    Ok((gram_matrix(kx, d.x())?.into_entries(), gram_matrix(ky, d.y())?.into_entries()))
}

fn pair_distances(rx: &SemimetricSpec, ry: &SemimetricSpec, d: &Dataset) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    Ok((distance_matrix(rx, d.x())?.into_entries(), distance_matrix(ry, d.y())?.into_entries()))
}

/// Generalized conditional distance covariance at one weight vector.
pub fn gcdcov_at(rx: &SemimetricSpec, ry: &SemimetricSpec, d: &Dataset, w: &[f64]) -> Result<MeasureResult> {
    check_weights(w, d.len())?;
    let (dx, dy) = pair_distances(rx, ry, d)?;
    MeasureResult::squared("gcdcov_at", self_term(&dx, &dy, w), d.len())
}

/// Pointwise HSCIC: squared product-kernel distance between the weighted joint
/// law of `(X, Y)` and the product of its weighted marginals.
pub fn hscic_at(kx: &KernelSpec, ky: &KernelSpec, d: &Dataset, w: &[f64]) -> Result<MeasureResult> {
    check_weights(w, d.len())?;
    let (gx, gy) = pair_grams(kx, ky, d)?;
    MeasureResult::squared("hscic_at", self_term(&gx, &gy, w), d.len())
}

/// Inner product of the conditional cross-covariance operators at two weight vectors.
pub fn h_hat(kx: &KernelSpec, ky: &KernelSpec, d: &Dataset, w1: &[f64], w2: &[f64]) -> Result<f64> {
    check_weights(w1, d.len())?;
    check_weights(w2, d.len())?;
    let (gx, gy) = pair_grams(kx, ky, d)?;
    Ok(cross_term(&gx, &gy, w1, w2))
}

/// Pointwise measure at every row of `w`, from pairwise matrices `a` (on X) and `b` (on Y).
pub fn pointwise_profile(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &DMatrix<f64>) -> Vec<f64> {
    let wt = w.transpose();
    let aw = matmul(a, &wt);
    let bw = matmul(b, &wt);
    let cw = matmul(&a.component_mul(b), &wt);
    let n = a.nrows();
    par::map_range(wt.ncols(), |j| {
        let mut joint = 0.0;
        let mut mixed = 0.0;
        let mut ax = 0.0;
        let mut by = 0.0;
        for i in 0..n {
            let wij = wt[(i, j)];
            joint += wij * cw[(i, j)];
            mixed += wij * aw[(i, j)] * bw[(i, j)];
            ax += wij * aw[(i, j)];
            by += wij * bw[(i, j)];
        }
        joint - 2.0 * mixed + ax * by
    })
}

fn averaged(profile: &[f64]) -> f64 {
    par::ordered_sum(profile) / profile.len() as f64
}

fn smoothing_params(r: MeasureResult, s: &SmoothingSpec) -> MeasureResult {
    r.with_param("smoothing_shape", s.shape().to_string()).with_param("smoothing_bandwidth", s.bandwidth())
}

fn self_weights(d: &Dataset, s: &SmoothingSpec) -> Result<ConditionalWeightMatrix> {
    if d.len() < 2 {
        return Err(Error::input("averaged conditional measures need n >= 2"));
    }
    weight_matrix(s, d.z(), d.z())
}

/// `(1/n) sum_j HSCIC(W_j)` with `W_j` the smoothing weights at `Z_j`.
pub fn avg_hscic(kx: &KernelSpec, ky: &KernelSpec, d: &Dataset, s: &SmoothingSpec) -> Result<MeasureResult> {
    let w = self_weights(d, s)?;
    let (gx, gy) = pair_grams(kx, ky, d)?;
    let value = averaged(&pointwise_profile(&gx, &gy, w.weights()));
    Ok(smoothing_params(MeasureResult::squared("avg_hscic", value, d.len())?, s))
}

/// `(1/n) sum_j gCdCov(W_j)`; with Euclidean metrics this is the conditional
/// distance covariance plug-in.
pub fn avg_gcdcov(rx: &SemimetricSpec, ry: &SemimetricSpec, d: &Dataset, s: &SmoothingSpec) -> Result<MeasureResult> {
    let w = self_weights(d, s)?;
    let (dx, dy) = pair_distances(rx, ry, d)?;
    let value = averaged(&pointwise_profile(&dx, &dy, w.weights()));
    Ok(smoothing_params(MeasureResult::squared("gcdcov_avg", value, d.len())?, s))
}

/// `h[j, j'] = h_hat(W_j, W_j')` for every pair of weight rows.
pub fn h_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let wt = w.transpose();
    let aw = matmul(a, &wt);
    let bw = matmul(b, &wt);
    let cw = matmul(&a.component_mul(b), &wt);
    let joint = matmul(w, &cw);
    let mixed = matmul(w, &aw.component_mul(&bw));
    let product = matmul(w, &aw).component_mul(&matmul(w, &bw));
    &joint - &mixed - mixed.transpose() + product
}

/// `(1/m^2) sum_{j, j'} kz[j, j'] h[j, j']`.
pub fn vstat_from_h(kz: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    let m = h.nrows() as f64;
    kz.component_mul(h).sum() / (m * m)
}

/// Smoothed V-statistic `(1/n^2) sum_{j, j'} k_Z(Z_j, Z_j') h_hat(W_j, W_j')`.
pub fn hscic_vstat(
    kx: &KernelSpec,
    ky: &KernelSpec,
    kz: &KernelSpec,
    d: &Dataset,
    s: &SmoothingSpec,
) -> Result<MeasureResult> {
    let w = self_weights(d, s)?;
    let (gx, gy) = pair_grams(kx, ky, d)?;
    let gz = gram_matrix(kz, d.z())?.into_entries();
    let h = h_matrix(&gx, &gy, w.weights());
    Ok(smoothing_params(MeasureResult::squared("hscic_vstat", vstat_from_h(&gz, &h), d.len())?, s))
}
