//! Slow, independent validators for the estimators.
//!
//! Nothing here reuses the estimator code paths beyond Gram-matrix
//! construction: the loops are written out literally, the characteristic
//! function route integrates numerically, and the operator route factors each
//! Gram matrix into explicit feature coordinates.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{gram_matrix, KernelSpec};
use crate::par;
use crate::smoothing::SmoothingSpec;
use crate::special::gamma_half;
use crate::trace::RegularizationSpec;

/// Largest sample the operator oracle accepts.
pub const OPERATOR_ORACLE_MAX_N: usize = 256;
/// Largest sample the literal averaged-HSCIC loop accepts.
pub const NAIVE_AVG_MAX_N: usize = 16;
/// Largest sample the literal V-statistic loop accepts.
pub const NAIVE_VSTAT_MAX_N: usize = 8;

/// `pi^((p+1)/2) / Gamma((p+1)/2)`.
pub fn cp_constant(p: usize) -> Result<f64> {
    if p < 1 {
        return Err(Error::input("cp_constant needs p >= 1"));
    }
    Ok(PI.powf((p as f64 + 1.0) / 2.0) / gamma_half(p as u32 + 1))
}

/// Log-spaced trapezoid grid on `[-T, -eps] U [eps, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub half_width: f64,
    pub points_per_axis: usize,
    pub singularity_cutoff: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { half_width: 1e4, points_per_axis: 1 << 20, singularity_cutoff: 1e-6 }
    }
}

impl QuadratureGrid {
    pub fn new(half_width: f64, points_per_axis: usize, singularity_cutoff: f64) -> Result<Self> {
        let g = QuadratureGrid { half_width, points_per_axis, singularity_cutoff };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.singularity_cutoff > 0.0 && self.half_width > self.singularity_cutoff && self.half_width.is_finite())
        {
            return Err(Error::input(format!(
                "quadrature grid needs half_width > singularity_cutoff > 0, got {} and {}",
                self.half_width, self.singularity_cutoff
            )));
        }
        if self.points_per_axis < 16 {
            return Err(Error::input("quadrature grid needs at least 16 points per axis"));
        }
        Ok(())
    }

    /// `int (1 - cos(t x)) / (pi t^2) dt` over both half-axes.
    ///
    /// Substituting `t = e^u` turns each half-axis into
    /// `int (1 - cos(e^u x)) e^-u du` on a uniform grid.
    pub fn one_minus_cos(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let lo = self.singularity_cutoff.ln();
        let hi = self.half_width.ln();
        let m = self.points_per_axis - 1;
        let h = (hi - lo) / m as f64;
        let f = |k: usize| {
            let t = (lo + h * k as f64).exp();
            let tx = t * x;
            // 1 - cos(a) = 2 sin^2(a/2) keeps precision for small a
            let s = (0.5 * tx).sin();
            2.0 * s * s / t
        };
        let mut total = 0.5 * (f(0) + f(m));
        for k in 1..m {
            total += f(k);
        }
        2.0 * h * total / PI
    }
}

/// Numerical value of the p = 1 weight identity, which should be `|x|`.
pub fn weight_identity_check(x: f64, grid: &QuadratureGrid) -> f64 {
    grid.one_minus_cos(x)
}

/// Weighted-L2 inner product of the empirical conditional characteristic
/// function differences under `w1` and `w2`, with weight `1 / (pi^2 t^2 s^2)`.
///
/// The difference under `w` is `sum_ik c_ik exp(i(t x_i + s y_k))` with
/// `c_ik = w_i [i = k] - w_i w_k`, whose row and column sums vanish; the
/// integral therefore separates into one-dimensional
/// `int (1 - cos) / (pi t^2)` factors on each axis.
pub fn cf_h_oracle(d: &Dataset, w1: &[f64], w2: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    if d.x().dim() != 1 || d.y().dim() != 1 {
        return Err(Error::Unsupported(format!(
            "characteristic-function oracle needs univariate X and Y, got p = {}, q = {}",
            d.x().dim(),
            d.y().dim()
        )));
    }
    grid.validate()?;
    let n = d.len();
    if w1.len() != n || w2.len() != n {
        return Err(Error::input("weight length does not match the dataset"));
    }
    let x = d.x().column(0);
    let y = d.y().column(0);
    let axis = |v: &[f64]| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let vals = par::map_range(pairs.len(), |k| grid.one_minus_cos(v[pairs[k].0] - v[pairs[k].1]));
        let mut q = DMatrix::zeros(n, n);
        for (&(i, j), val) in pairs.iter().zip(vals) {
            q[(i, j)] = val;
            q[(j, i)] = val;
        }
        q
    };
    let qx = axis(&x);
    let qy = axis(&y);
    let coeff = |w: &[f64]| DMatrix::from_fn(n, n, |i, k| if i == k { w[i] } else { 0.0 } - w[i] * w[k]);
    let c1 = coeff(w1);
    let c2 = coeff(w2);
    let inner = &c1 * &qy * c2.transpose();
    Ok(qx.component_mul(&inner).sum())
}

/// Feature coordinates `F` with `F F' = K`, from the eigendecomposition.
fn features(k: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = k.clone().symmetric_eigen();
    let mut f = eig.eigenvectors;
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    f
}

/// Squared HS norm of the regularized conditional cross-covariance between Y
/// and `(X, Z)` given Z, built from explicit empirical covariance operators.
pub fn operator_hs_oracle(
    kx: &KernelSpec,
    ky: &KernelSpec,
    kz: &KernelSpec,
    d: &Dataset,
    reg: RegularizationSpec,
) -> Result<f64> {
    let n = d.len();
    if n > OPERATOR_ORACLE_MAX_N {
        return Err(Error::Unsupported(format!("operator oracle refuses n = {n} > {OPERATOR_ORACLE_MAX_N}")));
    }
    if n < 2 {
        return Ok(0.0);
    }
    let gx = gram_matrix(kx, d.x())?.into_entries();
    let gy = gram_matrix(ky, d.y())?.into_entries();
    let gz = gram_matrix(kz, d.z())?.into_entries();
    let fy = features(&gy);
    let fz = features(&gz);
    let fxz = features(&gx.component_mul(&gz));
    let nf = n as f64;
    // empirical covariance of feature coordinates: (1/n) sum_i (f_i - mean)(g_i - mean)'
    let centered = |f: &DMatrix<f64>| {
        let mut c = f.clone();
        for j in 0..f.ncols() {
            let mean = f.column(j).mean();
            c.column_mut(j).add_scalar_mut(-mean);
        }
        c
    };
    let (cy, cz, cxz) = (centered(&fy), centered(&fz), centered(&fxz));
    let cov = |a: &DMatrix<f64>, b: &DMatrix<f64>| a.transpose() * b / nf;
    let s_y_xz = cov(&cy, &cxz);
    let s_y_z = cov(&cy, &cz);
    let mut s_zz = cov(&cz, &cz);
    for i in 0..s_zz.nrows() {
        s_zz[(i, i)] += reg.lambda();
    }
    let s_z_xz = cov(&cz, &cxz);
    let solved = s_zz
        .cholesky()
        .ok_or_else(|| Error::numerical("regularized covariance is not positive definite"))?
        .solve(&s_z_xz);
    let c = s_y_xz - s_y_z * solved;
    Ok(c.norm_squared())
}

fn literal_weights(s: &SmoothingSpec, d: &Dataset) -> Result<Vec<Vec<f64>>> {
    let n = d.len();
    (0..n)
        .map(|j| {
            let theta: Vec<f64> = (0..n).map(|i| s.raw_weight(d.z().row(j), d.z().row(i))).collect();
            let total: f64 = theta.iter().sum();
            if total < 1e-300 {
                return Err(Error::EmptyNeighborhood { rows: vec![j] });
            }
            Ok(theta.into_iter().map(|t| t / total).collect())
        })
        .collect()
}

fn literal_grams(kx: &KernelSpec, ky: &KernelSpec, d: &Dataset) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    Ok((gram_matrix(kx, d.x())?.into_entries(), gram_matrix(ky, d.y())?.into_entries()))
}

/// Pointwise measure as a literal sum over index tuples.
pub fn naive_hscic_at(gx: &DMatrix<f64>, gy: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = w.len();
    let mut joint = 0.0;
    let mut mixed = 0.0;
    let mut ax = 0.0;
    let mut by = 0.0;
    for a in 0..n {
        for b in 0..n {
            joint += w[a] * w[b] * gx[(a, b)] * gy[(a, b)];
            ax += w[a] * w[b] * gx[(a, b)];
            by += w[a] * w[b] * gy[(a, b)];
            for c in 0..n {
                mixed += w[a] * w[b] * w[c] * gx[(a, b)] * gy[(a, c)];
            }
        }
    }
    joint - 2.0 * mixed + ax * by
}

/// Averaged HSCIC over the observed Z as a literal sum; refuses `n > 16`.
pub fn naive_avg_hscic(kx: &KernelSpec, ky: &KernelSpec, d: &Dataset, s: &SmoothingSpec) -> Result<f64> {
    let n = d.len();
    if n > NAIVE_AVG_MAX_N {
        return Err(Error::Unsupported(format!("naive averaged loop refuses n = {n} > {NAIVE_AVG_MAX_N}")));
    }
    let w = literal_weights(s, d)?;
    let (gx, gy) = literal_grams(kx, ky, d)?;
    let mut total = 0.0;
    for wj in &w {
        let mut joint = 0.0;
        let mut mixed = 0.0;
        let mut outer = 0.0;
        for a in 0..n {
            for b in 0..n {
                joint += wj[a] * wj[b] * gx[(a, b)] * gy[(a, b)];
                for c in 0..n {
                    mixed += wj[a] * wj[b] * wj[c] * gx[(a, b)] * gy[(a, c)];
                    for e in 0..n {
                        outer += wj[a] * wj[b] * wj[c] * wj[e] * gx[(a, b)] * gy[(c, e)];
                    }
                }
            }
        }
        total += joint - 2.0 * mixed + outer;
    }
    Ok(total / n as f64)
}

/// The smoothed V-statistic as a literal sum over six indices; refuses `n > 8`.
pub fn naive_hscic_vstat(
    kx: &KernelSpec,
    ky: &KernelSpec,
    kz: &KernelSpec,
    d: &Dataset,
    s: &SmoothingSpec,
) -> Result<f64> {
    let n = d.len();
    if n > NAIVE_VSTAT_MAX_N {
        return Err(Error::Unsupported(format!("naive V-statistic loop refuses n = {n} > {NAIVE_VSTAT_MAX_N}")));
    }
    let w = literal_weights(s, d)?;
    let (gx, gy) = literal_grams(kx, ky, d)?;
    let gz = gram_matrix(kz, d.z())?.into_entries();
    let mut total = 0.0;
    for j in 0..n {
        for l in 0..n {
            let (u, v) = (&w[j], &w[l]);
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += u[a] * v[b] * gx[(a, b)] * gy[(a, b)];
                    for c in 0..n {
                        acc -= u[a] * v[b] * v[c] * gx[(a, b)] * gy[(a, c)];
                        acc -= v[a] * u[b] * u[c] * gx[(a, b)] * gy[(a, c)];
                        for e in 0..n {
                            acc += u[a] * v[b] * u[c] * v[e] * gx[(a, b)] * gy[(c, e)];
                        }
                    }
                }
            }
            total += gz[(j, l)] * acc;
        }
    }
    Ok(total / (n * n) as f64)
}

/// `sum_z p(z)^2 HSCIC(uniform weights on stratum z)` over the distinct Z rows.
pub fn stratified_vstat(kx: &KernelSpec, ky: &KernelSpec, d: &Dataset) -> Result<f64> {
    let n = d.len();
    let mut strata: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let z = d.z().row(i);
        match strata.iter_mut().find(|(key, _)| key.as_slice() == z) {
            Some((_, rows)) => rows.push(i),
            None => strata.push((z.to_vec(), vec![i])),
        }
    }
    let (gx, gy) = literal_grams(kx, ky, d)?;
    let mut total = 0.0;
    for (_, rows) in &strata {
        let mut w = vec![0.0; n];
        for &i in rows {
            w[i] = 1.0 / rows.len() as f64;
        }
        let p = rows.len() as f64 / n as f64;
        total += p * p * naive_hscic_at(&gx, &gy, &w);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::Points;
    use approx::assert_relative_eq;

    #[test]
    fn cp_values() {
        assert_relative_eq!(cp_constant(1).unwrap(), PI, max_relative = 1e-15);
        assert_relative_eq!(cp_constant(2).unwrap(), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(cp_constant(3).unwrap(), PI * PI, max_relative = 1e-14);
        assert!(cp_constant(0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(QuadratureGrid::new(1.0, 100, 2.0).is_err());
        assert!(QuadratureGrid::new(1e4, 8, 1e-6).is_err());
        assert!(QuadratureGrid::new(1e4, 64, 0.0).is_err());
        assert!(QuadratureGrid::default().validate().is_ok());
    }

    #[test]
    fn weight_identity_zero() {
        assert_eq!(weight_identity_check(0.0, &QuadratureGrid::default()), 0.0);
    }

    #[test]
    fn oracle_guards() {
        let col = Points::from_column(&[0.0; 17]).unwrap();
        let d = Dataset::new(col.clone(), col.clone(), col).unwrap();
        let k = KernelSpec::Gaussian { bandwidth: 1.0 };
        let s = SmoothingSpec::new(crate::smoothing::SmoothingShape::Gaussian, 1.0).unwrap();
        assert!(matches!(naive_avg_hscic(&k, &k, &d, &s), Err(Error::Unsupported(_))));
        assert!(matches!(naive_hscic_vstat(&k, &k, &k, &d, &s), Err(Error::Unsupported(_))));
        let two = Points::from_rows(&[[0.0, 1.0]; 4]).unwrap();
        let d2 = Dataset::new(two.clone(), two.clone(), two).unwrap();
        let w = vec![0.25; 4];
        assert!(matches!(cf_h_oracle(&d2, &w, &w, &QuadratureGrid::default()), Err(Error::Unsupported(_))));
    }
}
