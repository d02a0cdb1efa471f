use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Squared measures may come out this far below zero from rounding alone.
pub const NEGATIVE_CLAMP_FLOOR: f64 = -1e-10;

/// A computed dependence measure together with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureResult {
    pub value: f64,
    pub estimator: String,
    pub params: BTreeMap<String, Value>,
    pub n: usize,
}

impl MeasureResult {
    pub fn new(estimator: &str, value: f64, n: usize) -> Self {
        MeasureResult { value, estimator: estimator.to_owned(), params: BTreeMap::new(), n }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    /// Builds the result for a quantity that is a squared norm: values in
    /// `(-1e-10, 0)` become 0 (recording the raw value), lower values are errors.
    pub fn squared(estimator: &str, raw: f64, n: usize) -> Result<Self> {
        let value = clamp_squared(raw).map_err(|_| {
            if raw.is_finite() {
                Error::numerical(format!("{estimator} produced {raw:e}, below the rounding floor -1e-10"))
            } else {
                Error::numerical(format!("{estimator} produced the non-finite value {raw}"))
            }
        })?;
        let mut out = MeasureResult::new(estimator, value, n);
        if raw < 0.0 {
            out.params.insert("clamped_from".to_owned(), raw.into());
        }
        Ok(out)
    }
}

/// Clamps rounding-level negatives of a squared quantity to zero.
pub fn clamp_squared(raw: f64) -> Result<f64> {
    if !raw.is_finite() {
        return Err(Error::numerical(format!("non-finite value {raw}")));
    }
    if raw < NEGATIVE_CLAMP_FLOOR {
        Err(Error::numerical(format!("squared measure {raw:e} below -1e-10")))
    } else {
        Ok(raw.max(0.0))
    }
}
