//! Nadaraya-Watson smoothing weights over the conditioning variable.
//!
//! For a radial profile `K` and bandwidth `t`, sample `i` receives raw mass
//! `theta_i(z) = K(||z - Z_i|| / t)` at query `z`, and the conditional law of
//! `(X, Y)` given `Z = z` is estimated by the weights `theta_i(z) / theta(z)`
//! with `theta(z) = sum_i theta_i(z)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::points::{euclidean, Points};
use crate::special::unit_ball_volume;

/// Total raw mass below which a query has no usable neighbors.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingShape {
    /// `exp(-u^2 / 2)`
    Gaussian,
    /// `max(0, 1 - u^2)`
    Epanechnikov,
    /// `1{u <= 1}`
    Box,
}

impl SmoothingShape {
    pub fn profile(self, u: f64) -> f64 {
        match self {
            SmoothingShape::Gaussian => (-0.5 * u * u).exp(),
            SmoothingShape::Epanechnikov => (1.0 - u * u).max(0.0),
            SmoothingShape::Box => {
                if u <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Constant `c` making `c * profile(||v||)` integrate to 1 over `R^dim`.
    pub fn normalization(self, dim: u32) -> f64 {
        let d = dim as f64;
        match self {
            SmoothingShape::Gaussian => (2.0 * std::f64::consts::PI).powf(-d / 2.0),
            SmoothingShape::Box => 1.0 / unit_ball_volume(dim),
            SmoothingShape::Epanechnikov => (d + 2.0) / (2.0 * unit_ball_volume(dim)),
        }
    }
}

impl fmt::Display for SmoothingShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SmoothingShape::Gaussian => "gaussian",
            SmoothingShape::Epanechnikov => "epanechnikov",
            SmoothingShape::Box => "box",
        })
    }
}

impl FromStr for SmoothingShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(SmoothingShape::Gaussian),
            "epanechnikov" => Ok(SmoothingShape::Epanechnikov),
            "box" => Ok(SmoothingShape::Box),
            other => Err(Error::input(format!("unknown smoothing shape '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    shape: SmoothingShape,
    bandwidth: f64,
}

impl SmoothingSpec {
    pub fn new(shape: SmoothingShape, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::input(format!("smoothing bandwidth must be positive, got {bandwidth}")));
        }
        Ok(SmoothingSpec { shape, bandwidth })
    }

    pub fn shape(&self) -> SmoothingShape {
        self.shape
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Unnormalized mass `theta_i(query)`; the density normalization cancels in every ratio.
    pub fn raw_weight(&self, query: &[f64], zi: &[f64]) -> f64 {
        self.shape.profile(euclidean(query, zi) / self.bandwidth)
    }

    /// `c / t^dim`, the factor that turns a raw weight into a unit-mass density value.
    pub fn density_scale(&self, dim: usize) -> f64 {
        self.shape.normalization(dim as u32) / self.bandwidth.powi(dim as i32)
    }
}

fn normalized_row(spec: &SmoothingSpec, z: &Points, query: &[f64]) -> Option<Vec<f64>> {
    let raw: Vec<f64> = z.rows().map(|zi| spec.raw_weight(query, zi)).collect();
    let total: f64 = raw.iter().sum();
    if total < UNDERFLOW_FLOOR {
        return None;
    }
    Some(raw.into_iter().map(|r| r / total).collect())
}

/// `w_i = theta_i(query) / theta(query)`.
pub fn smoothing_weights(spec: &SmoothingSpec, z_points: &Points, query: &[f64]) -> Result<Vec<f64>> {
    if z_points.is_empty() {
        return Err(Error::input("smoothing needs at least one conditioning point"));
    }
    if query.len() != z_points.dim() {
        return Err(Error::DimensionMismatch { expected: z_points.dim(), got: query.len() });
    }
    normalized_row(spec, z_points, query).ok_or_else(|| Error::EmptyNeighborhoodAt(query.to_vec()))
}

/// Row-stochastic weights, one row per evaluation point.
#[derive(Debug, Clone)]
pub struct ConditionalWeightMatrix {
    weights: DMatrix<f64>,
    eval_points: Points,
}

impl ConditionalWeightMatrix {
    /// `n_eval x n` matrix; row `j` is the weight vector at evaluation point `j`.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn eval_points(&self) -> &Points {
        &self.eval_points
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.weights.row(j).iter().copied().collect()
    }

    pub fn n_eval(&self) -> usize {
        self.weights.nrows()
    }
}

/// Weights at every evaluation point. Fails with the full list of empty rows.
pub fn weight_matrix(spec: &SmoothingSpec, z_points: &Points, eval_points: &Points) -> Result<ConditionalWeightMatrix> {
    if z_points.is_empty() || eval_points.is_empty() {
        return Err(Error::input("weight matrix needs nonempty conditioning and evaluation points"));
    }
    if z_points.dim() != eval_points.dim() {
        return Err(Error::DimensionMismatch { expected: z_points.dim(), got: eval_points.dim() });
    }
    let rows = par::map_range(eval_points.len(), |j| normalized_row(spec, z_points, eval_points.row(j)));
    let empty: Vec<usize> = rows.iter().enumerate().filter(|(_, r)| r.is_none()).map(|(j, _)| j).collect();
    if !empty.is_empty() {
        return Err(Error::EmptyNeighborhood { rows: empty });
    }
    let n = z_points.len();
    let mut weights = DMatrix::zeros(eval_points.len(), n);
    for (j, row) in rows.into_iter().enumerate() {
        for (i, v) in row.into_iter().flatten().enumerate() {
            weights[(j, i)] = v;
        }
    }
    Ok(ConditionalWeightMatrix { weights, eval_points: eval_points.clone() })
}

/// Median-heuristic bandwidth on `z` scaled by `n^(-1 / (4 + r))`.
pub fn default_bandwidth(z: &Points) -> f64 {
    let n = z.len().max(1) as f64;
    crate::geometry::median_heuristic(z) * n.powf(-1.0 / (4.0 + z.dim() as f64))
}
