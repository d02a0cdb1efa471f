//! Distance- and kernel-based measures of (conditional) independence.
//!
//! The crate computes distance covariance, HSIC, conditional distance
//! covariance, HSCIC and the conditional cross-covariance norm, with
//! permutation tests and brute-force oracles for checking the estimators
//! against each other.

pub mod bench;
pub mod citest;
pub mod conditional;
pub mod data;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod measure;
pub mod oracles;
pub mod par;
pub mod points;
pub mod smoothing;
pub mod special;
pub mod statistic;
pub mod trace;
pub mod unconditional;
pub mod verify;
pub mod vstat;

pub use dataset::{ColumnRoleMap, Dataset};
pub use error::{Error, Result};
pub use geometry::{KernelSpec, SemimetricSpec};
pub use measure::MeasureResult;
pub use points::Points;
pub use smoothing::{SmoothingShape, SmoothingSpec};
pub use statistic::{EstimatorConfig, Measure};
pub use trace::RegularizationSpec;
