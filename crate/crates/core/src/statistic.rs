//! Measure selection, textual kernel/metric syntax, default resolution, and
//! statistics prepared for repeated evaluation under permuted Y.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::conditional::{h_matrix, pointwise_profile, vstat_from_h};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::{distance_matrix, gram_matrix, median_heuristic, KernelSpec, SemimetricSpec};
use crate::measure::{clamp_squared, MeasureResult};
use crate::points::Points;
use crate::smoothing::{default_bandwidth, weight_matrix, SmoothingShape, SmoothingSpec};
use crate::trace::{PreparedTrace, RegularizationSpec};
use crate::unconditional::{dcov_v, hsic_v, PairedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    AvgHscic,
    HscicVstat,
    HscicTrace,
    GcdcovAvg,
    Hsic,
    Dcov,
}

impl Measure {
    pub const ALL: [Measure; 6] =
        [Measure::AvgHscic, Measure::HscicVstat, Measure::HscicTrace, Measure::GcdcovAvg, Measure::Hsic, Measure::Dcov];

    pub fn name(self) -> &'static str {
        match self {
            Measure::AvgHscic => "avg_hscic",
            Measure::HscicVstat => "hscic_vstat",
            Measure::HscicTrace => "hscic_trace",
            Measure::GcdcovAvg => "gcdcov_avg",
            Measure::Hsic => "hsic",
            Measure::Dcov => "dcov",
        }
    }

    /// Whether the measure targets conditional dependence and can drive a test.
    pub fn is_conditional(self) -> bool {
        !matches!(self, Measure::Hsic | Measure::Dcov)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL.into_iter().find(|m| m.name() == s.trim()).ok_or_else(|| {
            let names: Vec<&str> = Measure::ALL.iter().map(|m| m.name()).collect();
            Error::input(format!("unknown measure '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

fn parse_positive(what: &str, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::input(format!("{what}: '{s}' is not a number")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::input(format!("{what} must be positive, got {v}")));
    }
    Ok(v)
}

/// A kernel whose scale may be left to the data.
///
/// Syntax: `gaussian[:bw]`, `laplacian[:scale]`, `gaussian-density:t`,
/// `distance[:<metric>]`, `dirac`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Gaussian(Option<f64>),
    Laplacian(Option<f64>),
    GaussianDensity(f64),
    Distance(MetricChoice),
    Dirac,
}

impl KernelChoice {
    /// Fills in data-dependent scales (median heuristic) for `points`.
    pub fn resolve(&self, points: &Points) -> KernelSpec {
        match self {
            KernelChoice::Gaussian(bw) => {
                KernelSpec::Gaussian { bandwidth: bw.unwrap_or_else(|| median_heuristic(points)) }
            }
            KernelChoice::Laplacian(s) => {
                KernelSpec::Laplacian { scale: s.unwrap_or_else(|| median_heuristic(points)) }
            }
            KernelChoice::GaussianDensity(t) => KernelSpec::GaussianDensity { bandwidth: *t },
            KernelChoice::Distance(m) => KernelSpec::DistanceInduced { base: m.resolve(points), anchor: vec![] },
            KernelChoice::Dirac => KernelSpec::DiracDiscrete,
        }
    }
}

impl FromStr for KernelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("gaussian", a) => Ok(KernelChoice::Gaussian(a.map(|a| parse_positive("gaussian bandwidth", a)).transpose()?)),
            ("laplacian", a) => Ok(KernelChoice::Laplacian(a.map(|a| parse_positive("laplacian scale", a)).transpose()?)),
            ("gaussian-density", Some(a)) => Ok(KernelChoice::GaussianDensity(parse_positive("gaussian-density bandwidth", a)?)),
            ("distance", None) => Ok(KernelChoice::Distance(MetricChoice::Euclidean)),
            ("distance", Some(m)) => Ok(KernelChoice::Distance(m.parse()?)),
            ("dirac", None) => Ok(KernelChoice::Dirac),
            _ => Err(Error::input(format!(
                "unknown kernel '{s}' (expected gaussian[:bw], laplacian[:scale], gaussian-density:t, distance[:metric], dirac)"
            ))),
        }
    }
}

/// Syntax: `euclidean`, `euclidean-power:alpha`, `kernel:<kernel>`.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricChoice {
    Euclidean,
    EuclideanPower(f64),
    Kernel(Box<KernelChoice>),
}

impl MetricChoice {
    pub fn resolve(&self, points: &Points) -> SemimetricSpec {
        match self {
            MetricChoice::Euclidean => SemimetricSpec::Euclidean,
            MetricChoice::EuclideanPower(alpha) => SemimetricSpec::EuclideanPower { alpha: *alpha },
            MetricChoice::Kernel(k) => SemimetricSpec::KernelInduced { base: Box::new(k.resolve(points)) },
        }
    }
}

impl FromStr for MetricChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "euclidean" {
            return Ok(MetricChoice::Euclidean);
        }
        if let Some(a) = s.strip_prefix("euclidean-power:") {
            let alpha = parse_positive("euclidean-power exponent", a)?;
            if alpha > 2.0 {
                return Err(Error::input(format!("euclidean-power exponent must be in (0, 2], got {alpha}")));
            }
            return Ok(MetricChoice::EuclideanPower(alpha));
        }
        if let Some(k) = s.strip_prefix("kernel:") {
            return Ok(MetricChoice::Kernel(Box::new(k.parse()?)));
        }
        Err(Error::input(format!("unknown metric '{s}' (expected euclidean, euclidean-power:alpha, kernel:<kernel>)")))
    }
}

/// Estimator settings as requested; `None` means "use the default".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EstimatorConfig {
    pub kernel_x: Option<KernelChoice>,
    pub kernel_y: Option<KernelChoice>,
    pub kernel_z: Option<KernelChoice>,
    pub metric_x: Option<MetricChoice>,
    pub metric_y: Option<MetricChoice>,
    pub smoothing_shape: Option<SmoothingShape>,
    pub smoothing_bandwidth: Option<f64>,
    pub lambda: Option<f64>,
}

/// Box weights of half-width 0.5 select exact matches among integer level codes.
const DISCRETE_BOX_BANDWIDTH: f64 = 0.5;

impl EstimatorConfig {
    /// Resolves every default against `d`.
    pub fn resolve(&self, d: &Dataset) -> Result<ResolvedConfig> {
        let gaussian = KernelChoice::Gaussian(None);
        let kx = self.kernel_x.as_ref().unwrap_or(&gaussian).resolve(d.x());
        let ky = self.kernel_y.as_ref().unwrap_or(&gaussian).resolve(d.y());
        let kz = match &self.kernel_z {
            Some(k) => k.resolve(d.z()),
            None if d.is_z_discrete() => KernelSpec::DiracDiscrete,
            None => gaussian.resolve(d.z()),
        };
        kx.validate(d.x().dim())?;
        ky.validate(d.y().dim())?;
        kz.validate(d.z().dim())?;
        let rx = self.metric_x.as_ref().unwrap_or(&MetricChoice::Euclidean).resolve(d.x());
        let ry = self.metric_y.as_ref().unwrap_or(&MetricChoice::Euclidean).resolve(d.y());
        rx.validate(d.x().dim())?;
        ry.validate(d.y().dim())?;
        let (default_shape, default_t) = if d.is_z_discrete() {
            (SmoothingShape::Box, DISCRETE_BOX_BANDWIDTH)
        } else {
            (SmoothingShape::Gaussian, default_bandwidth(d.z()))
        };
        let smoothing = SmoothingSpec::new(
            self.smoothing_shape.unwrap_or(default_shape),
            self.smoothing_bandwidth.unwrap_or(default_t),
        )?;
        let lambda = match self.lambda {
            Some(l) => RegularizationSpec::new(l)?,
            None => {
                let diag: f64 = d.z().rows().map(|z| kz.eval_unchecked(z, z)).sum::<f64>() / d.len() as f64;
                RegularizationSpec::new(1e-3 * diag)?
            }
        };
        Ok(ResolvedConfig { kx, ky, kz, rx, ry, smoothing, lambda })
    }
}

fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("spec types serialize")
}

/// Concrete estimator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub kx: KernelSpec,
    pub ky: KernelSpec,
    pub kz: KernelSpec,
    pub rx: SemimetricSpec,
    pub ry: SemimetricSpec,
    pub smoothing: SmoothingSpec,
    pub lambda: RegularizationSpec,
}

impl ResolvedConfig {
    /// The settings `measure` depends on, for echoing into output documents.
    pub fn params(&self, measure: Measure) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        let uses_kernels = !matches!(measure, Measure::GcdcovAvg | Measure::Dcov);
        if uses_kernels {
            out.insert("kernel_x".into(), json(&self.kx));
            out.insert("kernel_y".into(), json(&self.ky));
        } else {
            out.insert("metric_x".into(), json(&self.rx));
            out.insert("metric_y".into(), json(&self.ry));
        }
        if matches!(measure, Measure::HscicVstat | Measure::HscicTrace) {
            out.insert("kernel_z".into(), json(&self.kz));
        }
        if matches!(measure, Measure::AvgHscic | Measure::HscicVstat | Measure::GcdcovAvg) {
            out.insert("smoothing_shape".into(), self.smoothing.shape().to_string().into());
            out.insert("smoothing_bandwidth".into(), self.smoothing.bandwidth().into());
        }
        if measure == Measure::HscicTrace {
            out.insert("lambda".into(), self.lambda.lambda().into());
        }
        out
    }
}

/// Evaluates `measure` on `d` with fully resolved settings.
pub fn compute(measure: Measure, d: &Dataset, cfg: &ResolvedConfig) -> Result<MeasureResult> {
    let base = match measure {
        Measure::AvgHscic => crate::conditional::avg_hscic(&cfg.kx, &cfg.ky, d, &cfg.smoothing)?,
        Measure::HscicVstat => crate::conditional::hscic_vstat(&cfg.kx, &cfg.ky, &cfg.kz, d, &cfg.smoothing)?,
        Measure::HscicTrace => crate::trace::hscic_trace(&cfg.kx, &cfg.ky, &cfg.kz, d, cfg.lambda)?,
        Measure::GcdcovAvg => crate::conditional::avg_gcdcov(&cfg.rx, &cfg.ry, d, &cfg.smoothing)?,
        Measure::Hsic => hsic_v(&cfg.kx, &cfg.ky, &PairedSample::new(d.x().clone(), d.y().clone())?)?,
        Measure::Dcov => dcov_v(&cfg.rx, &cfg.ry, &PairedSample::new(d.x().clone(), d.y().clone())?)?,
    };
    let mut out = base;
    out.params.extend(cfg.params(measure));
    Ok(out)
}

/// A conditional statistic with everything that does not involve Y precomputed.
#[derive(Debug, Clone)]
pub struct PreparedStatistic {
    measure: Measure,
    y_matrix: DMatrix<f64>,
    inner: Prepared,
}

#[derive(Debug, Clone)]
enum Prepared {
    Trace(PreparedTrace),
    Profile { x_matrix: DMatrix<f64>, weights: DMatrix<f64> },
    Vstat { x_matrix: DMatrix<f64>, weights: DMatrix<f64>, kz: DMatrix<f64> },
}

impl PreparedStatistic {
    pub fn new(measure: Measure, d: &Dataset, cfg: &ResolvedConfig) -> Result<Self> {
        if !measure.is_conditional() {
            return Err(Error::input(format!("{measure} is not a conditional statistic")));
        }
        if d.len() < 2 {
            return Err(Error::input("conditional statistics need n >= 2"));
        }
        let (x_matrix, y_matrix) = if measure == Measure::GcdcovAvg {
            (distance_matrix(&cfg.rx, d.x())?.into_entries(), distance_matrix(&cfg.ry, d.y())?.into_entries())
        } else {
            (gram_matrix(&cfg.kx, d.x())?.into_entries(), gram_matrix(&cfg.ky, d.y())?.into_entries())
        };
        let inner = match measure {
            Measure::HscicTrace => {
                let kz = gram_matrix(&cfg.kz, d.z())?.into_entries();
                Prepared::Trace(PreparedTrace::new(&x_matrix, &kz, cfg.lambda.lambda())?)
            }
            Measure::AvgHscic | Measure::GcdcovAvg => {
                let weights = weight_matrix(&cfg.smoothing, d.z(), d.z())?.weights().clone();
                Prepared::Profile { x_matrix, weights }
            }
            Measure::HscicVstat => {
                let weights = weight_matrix(&cfg.smoothing, d.z(), d.z())?.weights().clone();
                let kz = gram_matrix(&cfg.kz, d.z())?.into_entries();
                Prepared::Vstat { x_matrix, weights, kz }
            }
            Measure::Hsic | Measure::Dcov => unreachable!("rejected above"),
        };
        Ok(PreparedStatistic { measure, y_matrix, inner })
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn len(&self) -> usize {
        self.y_matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.y_matrix.nrows() == 0
    }

    /// The statistic with Y rows reordered as `Y[perm[i]]`.
    pub fn evaluate(&self, perm: &[usize]) -> Result<f64> {
        if perm.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: perm.len() });
        }
        let raw = match &self.inner {
            Prepared::Trace(t) => t.value_permuted(&self.y_matrix, perm),
            Prepared::Profile { x_matrix, weights } => {
                let b = self.permuted_y(perm);
                let profile = pointwise_profile(x_matrix, &b, weights);
                crate::par::ordered_sum(&profile) / profile.len() as f64
            }
            Prepared::Vstat { x_matrix, weights, kz } => {
                let b = self.permuted_y(perm);
                vstat_from_h(kz, &h_matrix(x_matrix, &b, weights))
            }
        };
        clamp_squared(raw)
    }

    fn permuted_y(&self, perm: &[usize]) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.y_matrix[(perm[i], perm[j])])
    }
}
