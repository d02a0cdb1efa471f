//! Unconditional two-sample and dependence measures: MMD, HSIC and distance covariance.
//!
//! All estimators are V-statistics (plug-in with replacement), so the
//! distance/kernel equivalences hold exactly on every finite sample.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{distance_matrix, gram_matrix, KernelSpec, SemimetricSpec};
use crate::measure::MeasureResult;
use crate::par;
use crate::points::Points;
use crate::vstat::{self_term, uniform_weights};

/// Paired rows `(X_i, Y_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Points,
    y: Points,
}

impl PairedSample {
    pub fn new(x: Points, y: Points) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::input(format!("paired sample has {} X rows but {} Y rows", x.len(), y.len())));
        }
        if x.is_empty() {
            return Err(Error::input("paired sample is empty"));
        }
        Ok(PairedSample { x, y })
    }

    pub fn x(&self) -> &Points {
        &self.x
    }

    pub fn y(&self) -> &Points {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn mean_cross_kernel(k: &KernelSpec, p: &Points, q: &Points) -> f64 {
    let rows = par::map_range(p.len(), |i| q.rows().map(|b| k.eval_unchecked(p.row(i), b)).sum::<f64>());
    par::ordered_sum(&rows) / (p.len() as f64 * q.len() as f64)
}

/// Squared kernel distance between the empirical laws of two samples.
pub fn mmd_squared(k: &KernelSpec, sample_p: &Points, sample_q: &Points) -> Result<MeasureResult> {
    if sample_p.is_empty() || sample_q.is_empty() {
        return Err(Error::input("mmd needs two nonempty samples"));
    }
    if sample_p.dim() != sample_q.dim() {
        return Err(Error::DimensionMismatch { expected: sample_p.dim(), got: sample_q.dim() });
    }
    k.validate(sample_p.dim())?;
    let pp = mean_cross_kernel(k, sample_p, sample_p);
    let qq = mean_cross_kernel(k, sample_q, sample_q);
    let pq = mean_cross_kernel(k, sample_p, sample_q);
    Ok(MeasureResult::squared("mmd", pp + qq - 2.0 * pq, sample_p.len() + sample_q.len())?
        .with_param("n_p", sample_p.len())
        .with_param("n_q", sample_q.len()))
}

/// HSIC V-statistic from precomputed Gram matrices (three-term expansion).
pub fn hsic_from_grams(kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> f64 {
    self_term(kx, ky, &uniform_weights(kx.nrows()))
}

/// `(1/n^2) Tr(K_X H0 K_Y H0)` with `H0 = I - (1/n) 1 1'`. Algebraically equal
/// to [`hsic_from_grams`]; kept as an independent route.
pub fn hsic_trace_form(kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> f64 {
    let n = kx.nrows();
    let kxc = double_center(kx);
    let kyc = double_center(ky);
    kxc.component_mul(&kyc).sum() / (n * n) as f64
}

fn double_center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

pub fn hsic_v(kx: &KernelSpec, ky: &KernelSpec, s: &PairedSample) -> Result<MeasureResult> {
    let gx = gram_matrix(kx, s.x())?;
    let gy = gram_matrix(ky, s.y())?;
    MeasureResult::squared("hsic", hsic_from_grams(gx.entries(), gy.entries()), s.len())
}

pub fn dcov_v(rx: &SemimetricSpec, ry: &SemimetricSpec, s: &PairedSample) -> Result<MeasureResult> {
    let dx = distance_matrix(rx, s.x())?;
    let dy = distance_matrix(ry, s.y())?;
    MeasureResult::squared("dcov", self_term(dx.entries(), dy.entries(), &uniform_weights(s.len())), s.len())
}
