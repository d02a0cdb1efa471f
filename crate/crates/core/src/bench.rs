//! Wall-clock scaling table for the estimators.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{generate, GeneratorSpec, Model};
use crate::error::{Error, Result};
use crate::statistic::{compute, EstimatorConfig, Measure};

pub const DEFAULT_SIZES: [usize; 4] = [128, 256, 512, 1024];
pub const DEFAULT_MEASURES: [Measure; 2] = [Measure::HscicTrace, Measure::AvgHscic];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub measure: Measure,
    pub n: usize,
    /// Fastest of the repeats.
    pub runtime_ms: f64,
    pub repeats: usize,
}

/// Times each measure on `gaussian_ci` data of each size, keeping the minimum over `repeats`.
pub fn run_bench(measures: &[Measure], sizes: &[usize], repeats: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if repeats < 1 {
        return Err(Error::input("bench needs at least one repeat"));
    }
    let mut rows = Vec::new();
    for &measure in measures {
        for &n in sizes {
            let d = generate(&GeneratorSpec::new(Model::GaussianCi, n, seed))?;
            let cfg = EstimatorConfig::default().resolve(&d)?;
            let mut best = f64::INFINITY;
            for _ in 0..repeats {
                let start = Instant::now();
                compute(measure, &d, &cfg)?;
                best = best.min(start.elapsed().as_secs_f64() * 1e3);
            }
            rows.push(BenchRow { measure, n, runtime_ms: best, repeats });
        }
    }
    Ok(rows)
}

/// `runtime(n_hi) / runtime(n_lo)` for `measure`, if both sizes were timed.
pub fn growth_ratio(rows: &[BenchRow], measure: Measure, n_lo: usize, n_hi: usize) -> Option<f64> {
    let at = |n| rows.iter().find(|r| r.measure == measure && r.n == n).map(|r| r.runtime_ms);
    Some(at(n_hi)? / at(n_lo)?)
}
