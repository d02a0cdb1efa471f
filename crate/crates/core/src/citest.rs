//! Conditional-independence tests calibrated by local permutation.
//!
//! Rows are grouped into neighborhoods of similar Z; each replicate shuffles
//! the Y rows within every neighborhood and recomputes the statistic, which
//! approximately preserves the X-Z and Y-Z relationships while breaking any
//! X-Y link that Z does not explain.
//!
//! Neighborhoods are built greedily from the outside in: while at least
//! `2 * knn` rows are unassigned, the unassigned row farthest from the
//! centroid of the unassigned Z values and its `knn - 1` nearest unassigned
//! rows (Euclidean, ties to the lower index) form a group; the remaining rows,
//! which sit in the middle of the cloud, form the last group.
//!
//! Replicate `b` draws its shuffle from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `b`, so results do not depend on how replicates are scheduled.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{generate, GeneratorSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::points::{squared_euclidean, Points};
use crate::statistic::{EstimatorConfig, Measure, PreparedStatistic};

pub const SCHEME: &str = "local_permutation";
pub const MIN_REPLICATES: usize = 19;

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub statistic: Measure,
    pub b: usize,
    pub knn: usize,
    pub alpha: f64,
    pub seed: u64,
    pub estimator: EstimatorConfig,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            statistic: Measure::HscicTrace,
            b: 200,
            knn: 10,
            alpha: 0.05,
            seed: 0,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl TestConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !self.statistic.is_conditional() {
            return Err(Error::input(format!("{} cannot be used as a conditional test statistic", self.statistic)));
        }
        if self.b < MIN_REPLICATES {
            return Err(Error::input(format!("B must be at least {MIN_REPLICATES}, got {}", self.b)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::input(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.knn < 2 {
            return Err(Error::input(format!("knn must be at least 2, got {}", self.knn)));
        }
        if n < 2 * self.knn {
            return Err(Error::input(format!("local permutation needs n >= 2 * knn = {}, got n = {n}", 2 * self.knn)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: Measure,
    pub statistic_value: f64,
    pub p_value: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub scheme: String,
    pub seed: u64,
    pub knn: usize,
    pub alpha: f64,
    pub reject: bool,
    pub n: usize,
    pub params: BTreeMap<String, Value>,
    pub replicate_values: Vec<f64>,
}

/// `(1 + #{replicates >= observed}) / (B + 1)`.
pub fn p_value(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|r| **r >= observed).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Partitions the rows into Z-neighborhoods of at least `knn` rows.
pub fn neighborhoods(z: &Points, knn: usize) -> Result<Vec<Vec<usize>>> {
    let n = z.len();
    if knn < 1 || n < knn {
        return Err(Error::input(format!("cannot form neighborhoods of {knn} from {n} rows")));
    }
    let mut assigned = vec![false; n];
    let mut remaining = n;
    let mut groups = Vec::new();
    while remaining >= 2 * knn {
        let free: Vec<usize> = (0..n).filter(|&i| !assigned[i]).collect();
        let dim = z.dim();
        let mut centroid = vec![0.0; dim];
        for &i in &free {
            for (c, v) in centroid.iter_mut().zip(z.row(i)) {
                *c += v / free.len() as f64;
            }
        }
        let mut seed_row = free[0];
        let mut far = -1.0;
        for &i in &free {
            let d = squared_euclidean(z.row(i), &centroid);
            if d > far {
                far = d;
                seed_row = i;
            }
        }
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&i| !assigned[i] && i != seed_row)
            .map(|i| (squared_euclidean(z.row(seed_row), z.row(i)), i))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut group = vec![seed_row];
        group.extend(candidates.iter().take(knn - 1).map(|c| c.1));
        group.sort_unstable();
        for &i in &group {
            assigned[i] = true;
        }
        remaining -= group.len();
        groups.push(group);
    }
    if remaining > 0 {
        groups.push((0..n).filter(|&i| !assigned[i]).collect());
    }
    Ok(groups)
}

/// A row index `perm` such that row `i` receives `Y[perm[i]]`, shuffling within groups only.
pub fn within_group_permutation(groups: &[Vec<usize>], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for g in groups {
        let mut sources = g.clone();
        sources.shuffle(rng);
        for (&dst, &src) in g.iter().zip(&sources) {
            perm[dst] = src;
        }
    }
    perm
}

pub fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

pub fn local_permutation_test(cfg: &TestConfig, d: &Dataset) -> Result<TestReport> {
    let n = d.len();
    cfg.validate(n)?;
    let resolved = cfg.estimator.resolve(d)?;
    let stat = PreparedStatistic::new(cfg.statistic, d, &resolved)?;
    let identity: Vec<usize> = (0..n).collect();
    let observed = stat.evaluate(&identity)?;
    let groups = neighborhoods(d.z(), cfg.knn)?;
    let replicate_values = par::try_map_range(cfg.b, |b| {
        let perm = within_group_permutation(&groups, n, &mut replicate_rng(cfg.seed, b));
        stat.evaluate(&perm).map_err(|e| Error::Replicate { index: b, source: Box::new(e) })
    })?;
    let p = p_value(observed, &replicate_values);
    Ok(TestReport {
        statistic: cfg.statistic,
        statistic_value: observed,
        p_value: p,
        b: cfg.b,
        scheme: SCHEME.to_owned(),
        seed: cfg.seed,
        knn: cfg.knn,
        alpha: cfg.alpha,
        reject: p <= cfg.alpha,
        n,
        params: resolved.params(cfg.statistic),
        replicate_values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePowerSummary {
    pub model: GeneratorSpec,
    pub runs: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub mean_statistic: f64,
    pub mean_runtime_ms: f64,
    pub p_values: Vec<f64>,
}

/// Repeats generate-then-test `runs` times. Run `k` uses data seed
/// `model.seed + k` and permutation seed `cfg.seed + k`.
pub fn size_power_experiment(cfg: &TestConfig, model: &GeneratorSpec, runs: usize) -> Result<SizePowerSummary> {
    if runs < 1 {
        return Err(Error::input("size/power experiment needs runs >= 1"));
    }
    let outcomes = par::try_map_range(runs, |k| {
        let start = Instant::now();
        let spec = GeneratorSpec { seed: model.seed.wrapping_add(k as u64), ..*model };
        let d = generate(&spec)?;
        let run_cfg = TestConfig { seed: cfg.seed.wrapping_add(k as u64), ..cfg.clone() };
        let report = local_permutation_test(&run_cfg, &d)?;
        Ok::<_, Error>((report.reject, report.statistic_value, report.p_value, start.elapsed().as_secs_f64() * 1e3))
    })?;
    let rejections = outcomes.iter().filter(|o| o.0).count();
    let mean = |f: fn(&(bool, f64, f64, f64)) -> f64| outcomes.iter().map(f).sum::<f64>() / runs as f64;
    Ok(SizePowerSummary {
        model: *model,
        runs,
        rejections,
        rejection_rate: rejections as f64 / runs as f64,
        mean_statistic: mean(|o| o.1),
        mean_runtime_ms: mean(|o| o.3),
        p_values: outcomes.iter().map(|o| o.2).collect(),
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `values` and U(0, 1).
pub fn ks_uniform_distance(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}
