//! Regularized trace estimator of the conditional cross-covariance norm.
//!
//! With `H = (1/n)(I - (1/n) 1 1')`, `K~ = K H` and
//! `S = (K~_Z + lambda I)^-1 K~_Z`, the estimate is
//! `Tr[K~_XZ (nH - S) K~_Y (nH - S)]` where `K_XZ = K_X o K_Z`.
//! Using `H (nH - S) = P` with `P = H (I - S)` symmetric, this equals
//! `Tr[K_Y P K_XZ P]`, which is how it is evaluated: the matrix
//! `G = P K_XZ P` does not involve Y, so re-evaluating with permuted Y rows
//! costs `O(n^2)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{gram_matrix, KernelSpec};
use crate::linalg::{left_center, matmul, right_center, solve};
use crate::measure::MeasureResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationSpec {
    lambda: f64,
}

impl RegularizationSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::input(format!("lambda must be finite and > 0, got {lambda}")));
        }
        Ok(RegularizationSpec { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `1e-3` times the mean diagonal of `kz`.
    pub fn default_for(kz: &DMatrix<f64>) -> Result<Self> {
        let n = kz.nrows().max(1) as f64;
        Self::new(1e-3 * kz.diagonal().sum() / n)
    }
}

/// The Y-free part of the trace estimator.
#[derive(Debug, Clone)]
pub struct PreparedTrace {
    g: DMatrix<f64>,
}

impl PreparedTrace {
    pub fn new(kx: &DMatrix<f64>, kz: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        let n = kx.nrows();
        if kz.nrows() != n || kx.ncols() != n || kz.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: kz.nrows() });
        }
        if n < 2 {
            return Ok(PreparedTrace { g: DMatrix::zeros(n, n) });
        }
        let kz_c = right_center(kz);
        let mut system = kz_c.clone();
        for i in 0..n {
            system[(i, i)] += lambda;
        }
        let s = solve(system, &kz_c)?;
        let p = left_center(&(DMatrix::identity(n, n) - s));
        let p = (&p + p.transpose()) * 0.5;
        let kxz = kx.component_mul(kz);
        let g = matmul(&matmul(&p, &kxz), &p);
        Ok(PreparedTrace { g })
    }

    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.g.nrows() == 0
    }

    /// `Tr[K_Y G]` for the Y Gram matrix `ky`.
    pub fn value(&self, ky: &DMatrix<f64>) -> f64 {
        let identity: Vec<usize> = (0..self.g.nrows()).collect();
        self.value_permuted(ky, &identity)
    }

    /// `Tr[K_Y' G]` where `K_Y'[i, j] = ky[perm[i], perm[j]]`.
    pub fn value_permuted(&self, ky: &DMatrix<f64>, perm: &[usize]) -> f64 {
        let n = self.g.nrows();
        let mut total = 0.0;
        for j in 0..n {
            let pj = perm[j];
            let mut col = 0.0;
            for i in 0..n {
                col += ky[(perm[i], pj)] * self.g[(i, j)];
            }
            total += col;
        }
        total
    }
}

/// Trace estimate from precomputed Gram matrices.
pub fn trace_from_grams(kx: &DMatrix<f64>, ky: &DMatrix<f64>, kz: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    if ky.nrows() != kx.nrows() {
        return Err(Error::DimensionMismatch { expected: kx.nrows(), got: ky.nrows() });
    }
    Ok(PreparedTrace::new(kx, kz, lambda)?.value(ky))
}

pub fn hscic_trace(
    kx: &KernelSpec,
    ky: &KernelSpec,
    kz: &KernelSpec,
    d: &Dataset,
    reg: RegularizationSpec,
) -> Result<MeasureResult> {
    let gx = gram_matrix(kx, d.x())?.into_entries();
    let gy = gram_matrix(ky, d.y())?.into_entries();
    let gz = gram_matrix(kz, d.z())?.into_entries();
    let raw = trace_from_grams(&gx, &gy, &gz, reg.lambda())?;
    Ok(MeasureResult::squared("hscic_trace", raw, d.len())?.with_param("lambda", reg.lambda()))
}
