//! Semimetrics, positive definite kernels, and the two-way correspondence
//! between them.
//!
//! A semimetric `rho` of negative type induces, for any anchor `theta`, the
//! positive definite kernel
//!
//! ```text
//! k(x, x') = rho(x, theta) + rho(x', theta) - rho(x, x')
//! ```
//!
//! and any positive definite kernel induces the negative-type semimetric
//!
//! ```text
//! rho(x, x') = (k(x, x) + k(x', x')) / 2 - k(x, x').
//! ```
//!
//! Plugging either into a signed measure with zero total mass and zero
//! marginals gives the same double integral, which is what makes the distance
//! and kernel dependence measures of this crate interchangeable.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::points::{euclidean, norm, squared_euclidean, Points};

/// Relative tolerance for positive semidefiniteness, against the trace.
pub const PSD_RELATIVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SemimetricSpec {
    Euclidean,
    /// `||a - b||^alpha` with `0 < alpha <= 2`.
    EuclideanPower {
        alpha: f64,
    },
    /// The semimetric induced by a positive definite kernel.
    KernelInduced {
        base: Box<KernelSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-||a - b||^2 / (2 bandwidth^2))`.
    Gaussian { bandwidth: f64 },
    /// Gaussian probability density of the difference,
    /// `(2 pi t^2)^(-d/2) exp(-||a - b||^2 / (2 t^2))`: a unit-mass kernel whose
    /// `t -> 0` limit acts as point evaluation.
    GaussianDensity { bandwidth: f64 },
    /// `exp(-||a - b|| / scale)`.
    Laplacian { scale: f64 },
    /// The kernel induced by a negative-type semimetric and an anchor point.
    /// An empty anchor stands for the origin of whatever space it is evaluated in.
    DistanceInduced { base: SemimetricSpec, anchor: Vec<f64> },
    /// 1 when the two points are identical, 0 otherwise. Intended for label codes.
    DiracDiscrete,
    /// `left(a[..split], b[..split]) * right(a[split..], b[split..])`.
    Product { left: Box<KernelSpec>, right: Box<KernelSpec>, split: usize },
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.is_empty() {
        return Err(Error::input("points must have dimension >= 1"));
    }
    Ok(())
}

impl SemimetricSpec {
    /// Validates parameters for points of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            SemimetricSpec::Euclidean => Ok(()),
            SemimetricSpec::EuclideanPower { alpha } => {
                if *alpha > 0.0 && *alpha <= 2.0 {
                    Ok(())
                } else {
                    Err(Error::input(format!("euclidean power must lie in (0, 2], got {alpha}")))
                }
            }
            SemimetricSpec::KernelInduced { base } => base.validate(dim),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dims(a, b)?;
        self.validate(a.len())?;
        Ok(self.eval_unchecked(a, b))
    }

    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            SemimetricSpec::Euclidean => euclidean(a, b),
            SemimetricSpec::EuclideanPower { alpha } => euclidean(a, b).powf(*alpha),
            SemimetricSpec::KernelInduced { base } => {
                let v = 0.5 * (base.eval_unchecked(a, a) + base.eval_unchecked(b, b)) - base.eval_unchecked(a, b);
                v.max(0.0)
            }
        }
    }

    /// `rho(x, anchor)`, with an empty anchor meaning the origin.
    pub(crate) fn to_anchor(&self, x: &[f64], anchor: &[f64]) -> f64 {
        if !anchor.is_empty() {
            return self.eval_unchecked(x, anchor);
        }
        match self {
            SemimetricSpec::Euclidean => norm(x),
            SemimetricSpec::EuclideanPower { alpha } => norm(x).powf(*alpha),
            SemimetricSpec::KernelInduced { .. } => self.eval_unchecked(x, &vec![0.0; x.len()]),
        }
    }
}

impl KernelSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            KernelSpec::Gaussian { bandwidth } | KernelSpec::GaussianDensity { bandwidth } => {
                positive("bandwidth", *bandwidth)
            }
            KernelSpec::Laplacian { scale } => positive("scale", *scale),
            KernelSpec::DistanceInduced { base, anchor } => {
                if !anchor.is_empty() && anchor.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: anchor.len() });
                }
                base.validate(dim)
            }
            KernelSpec::DiracDiscrete => Ok(()),
            KernelSpec::Product { left, right, split } => {
                if *split == 0 || *split >= dim {
                    return Err(Error::input(format!(
                        "product kernel split {split} must lie strictly inside dimension {dim}"
                    )));
                }
                left.validate(*split)?;
                right.validate(dim - split)
            }
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dims(a, b)?;
        self.validate(a.len())?;
        Ok(self.eval_unchecked(a, b))
    }

    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            KernelSpec::Gaussian { bandwidth } => (-squared_euclidean(a, b) / (2.0 * bandwidth * bandwidth)).exp(),
            KernelSpec::GaussianDensity { bandwidth } => {
                let var = bandwidth * bandwidth;
                let norm = (2.0 * std::f64::consts::PI * var).powf(-(a.len() as f64) / 2.0);
                norm * (-squared_euclidean(a, b) / (2.0 * var)).exp()
            }
            KernelSpec::Laplacian { scale } => (-euclidean(a, b) / scale).exp(),
            KernelSpec::DistanceInduced { base, anchor } => {
                base.to_anchor(a, anchor) + base.to_anchor(b, anchor) - base.eval_unchecked(a, b)
            }
            KernelSpec::DiracDiscrete => {
                if a == b {
                    1.0
                } else {
                    0.0
                }
            }
            KernelSpec::Product { left, right, split } => {
                let (a1, a2) = a.split_at(*split);
                let (b1, b2) = b.split_at(*split);
                left.eval_unchecked(a1, b1) * right.eval_unchecked(a2, b2)
            }
        }
    }
}

pub fn eval_semimetric(spec: &SemimetricSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    spec.eval(a, b)
}

pub fn eval_kernel(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    spec.eval(a, b)
}

/// `k(x, x') = rho(x, anchor) + rho(x', anchor) - rho(x, x')`. Pass an empty
/// anchor for the origin.
pub fn distance_induced_kernel(rho: &SemimetricSpec, anchor: &[f64]) -> KernelSpec {
    KernelSpec::DistanceInduced { base: rho.clone(), anchor: anchor.to_vec() }
}

/// `rho(x, x') = (k(x, x) + k(x', x')) / 2 - k(x, x')`.
pub fn kernel_induced_semimetric(k: &KernelSpec) -> SemimetricSpec {
    SemimetricSpec::KernelInduced { base: Box::new(k.clone()) }
}

/// Pairwise kernel evaluations on a point set.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    spec: KernelSpec,
}

/// Pairwise semimetric evaluations on a point set.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    entries: DMatrix<f64>,
    spec: SemimetricSpec,
}

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.entries)
    }

    /// Minimum eigenvalue at least `-1e-8 * trace`.
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_RELATIVE_TOLERANCE * self.entries.trace().abs()
    }
}

impl DistanceMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn spec(&self) -> &SemimetricSpec {
        &self.spec
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Fills a symmetric matrix from its upper triangle, one row per task.
fn symmetric_fill(n: usize, entry: impl Fn(usize, usize) -> f64 + Sync + Send) -> DMatrix<f64> {
    let upper = par::map_range(n, |i| (i..n).map(|j| entry(i, j)).collect::<Vec<_>>());
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            m[(i, i + off)] = v;
            m[(i + off, i)] = v;
        }
    }
    m
}

fn check_points(points: &Points) -> Result<()> {
    if points.is_empty() {
        return Err(Error::input("pairwise matrix needs at least one point"));
    }
    Ok(())
}

pub fn gram_matrix(spec: &KernelSpec, points: &Points) -> Result<GramMatrix> {
    check_points(points)?;
    spec.validate(points.dim())?;
    let n = points.len();
    let entries = match spec {
        // Anchor distances are shared by every pair in a row and column.
        KernelSpec::DistanceInduced { base, anchor } => {
            let to_anchor: Vec<f64> = points.rows().map(|x| base.to_anchor(x, anchor)).collect();
            symmetric_fill(n, |i, j| to_anchor[i] + to_anchor[j] - base.eval_unchecked(points.row(i), points.row(j)))
        }
        _ => symmetric_fill(n, |i, j| spec.eval_unchecked(points.row(i), points.row(j))),
    };
    Ok(GramMatrix { entries, spec: spec.clone() })
}

pub fn distance_matrix(spec: &SemimetricSpec, points: &Points) -> Result<DistanceMatrix> {
    check_points(points)?;
    spec.validate(points.dim())?;
    let entries =
        symmetric_fill(
            points.len(),
            |i, j| {
                if i == j {
                    0.0
                } else {
                    spec.eval_unchecked(points.row(i), points.row(j))
                }
            },
        );
    Ok(DistanceMatrix { entries, spec: spec.clone() })
}

/// Outcome of a randomized search for a negative-type violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeTypeCheck {
    /// No violating weight vector was found. This is evidence, not proof.
    pub holds: bool,
    /// Largest quadratic form seen, normalized by `sum |a_i a_j rho_ij|`.
    pub worst: f64,
}

/// Relative slack allowed on a normalized quadratic form before it counts as a violation.
pub const NEGATIVE_TYPE_TOLERANCE: f64 = 1e-10;

pub fn check_negative_type(
    spec: &SemimetricSpec,
    points: &Points,
    trials: usize,
    rng_seed: u64,
) -> Result<NegativeTypeCheck> {
    if points.len() < 2 {
        return Err(Error::input("negative-type check needs at least 2 points"));
    }
    let d = distance_matrix(spec, points)?;
    check_negative_type_matrix(d.entries(), trials, rng_seed)
}

/// Negative-type search on an explicit symmetric table of pairwise values.
pub fn check_negative_type_matrix(table: &DMatrix<f64>, trials: usize, rng_seed: u64) -> Result<NegativeTypeCheck> {
    let n = table.nrows();
    if n < 2 || table.ncols() != n {
        return Err(Error::input("negative-type check needs a square table of at least 2 points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let mut alpha: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mean = alpha.iter().sum::<f64>() / n as f64;
        alpha.iter_mut().for_each(|a| *a -= mean);
        let mut form = 0.0;
        let mut scale = 0.0;
        for i in 0..n {
            for j in 0..n {
                let t = alpha[i] * alpha[j] * table[(i, j)];
                form += t;
                scale += t.abs();
            }
        }
        let normalized = if scale > 0.0 { form / scale } else { 0.0 };
        worst = worst.max(normalized);
    }
    Ok(NegativeTypeCheck { holds: worst <= NEGATIVE_TYPE_TOLERANCE, worst })
}

/// Median of the nonzero pairwise Euclidean distances; 1.0 when every point coincides.
pub fn median_heuristic(points: &Points) -> f64 {
    let n = points.len();
    let mut dists: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(points.row(i), points.row(j));
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    let mid = dists.len() / 2;
    let (_, upper, _) = dists.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper;
    if dists.len() % 2 == 1 {
        upper
    } else {
        let lower = dists[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}
