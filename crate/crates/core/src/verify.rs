//! Self-contained identity suite: every check generates seeded random data,
//! evaluates two independent routes to the same number, and records the worst
//! deviation against a fixed tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditional::{gcdcov_at, h_hat, hscic_at, hscic_vstat};
use crate::data::{generate, GeneratorSpec, Model};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::geometry::{distance_induced_kernel, kernel_induced_semimetric, KernelSpec, SemimetricSpec};
use crate::oracles::{
    cf_h_oracle, cp_constant, naive_hscic_vstat, operator_hs_oracle, stratified_vstat, weight_identity_check,
    QuadratureGrid,
};
use crate::points::Points;
use crate::smoothing::{SmoothingShape, SmoothingSpec};
use crate::trace::{hscic_trace, RegularizationSpec};
use crate::unconditional::{dcov_v, hsic_v, PairedSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub all_passed: bool,
    pub identities: Vec<IdentityResult>,
}

#[derive(Clone, Copy)]
enum Scale {
    /// `|a - b| / |b|`
    Relative,
    /// `|a - b| / (1 + |b|)`
    OnePlus,
    Absolute,
}

struct Check {
    name: &'static str,
    tolerance: f64,
    scale: Scale,
    worst: f64,
    cases: usize,
}

impl Check {
    fn new(name: &'static str, tolerance: f64, scale: Scale) -> Self {
        Check { name, tolerance, scale, worst: 0.0, cases: 0 }
    }

    fn compare(&mut self, got: f64, want: f64) {
        let scale = match self.scale {
            Scale::Relative => want.abs().max(f64::MIN_POSITIVE),
            Scale::OnePlus => 1.0 + want.abs(),
            Scale::Absolute => 1.0,
        };
        let dev = if got == want { 0.0 } else { (got - want).abs() / scale };
        self.worst = if dev.is_nan() { f64::INFINITY } else { self.worst.max(dev) };
        self.cases += 1;
    }

    fn finish(self) -> IdentityResult {
        IdentityResult {
            name: self.name.to_owned(),
            passed: self.worst <= self.tolerance && self.cases > 0,
            max_deviation: self.worst,
            tolerance: self.tolerance,
            cases: self.cases,
        }
    }
}

pub(crate) fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize, q: usize, r: usize) -> Dataset {
    let mut block = |dim: usize| {
        let v: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        Points::new(v, dim).expect("finite")
    };
    let (x, y, z) = (block(p), block(q), block(r));
    Dataset::new(x, y, z).expect("aligned")
}

pub(crate) fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Runs the suite. `fault` flips the sign of one side of the first identity,
/// which must make the suite fail.
pub fn run_verify(seed: u64, fault: bool) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let sign = if fault { -1.0 } else { 1.0 };

    let mut dist_to_kernel = Check::new("distance_induced_hscic_equals_gcdcov", 1e-8, Scale::OnePlus);
    let mut kernel_to_dist = Check::new("kernel_induced_gcdcov_equals_hscic", 1e-8, Scale::OnePlus);
    for _ in 0..10 {
        let (p, q, r) = (rng.random_range(1..=3), rng.random_range(1..=3), rng.random_range(1..=2));
        let n = rng.random_range(5..=40);
        let d = random_dataset(&mut rng, n, p, q, r);
        let w = random_weights(&mut rng, n);
        let (rx, ry) =
            (SemimetricSpec::EuclideanPower { alpha: rng.random_range(0.5..2.0) }, SemimetricSpec::Euclidean);
        let g = gcdcov_at(&rx, &ry, &d, &w)?.value;
        for _ in 0..3 {
            let ax: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ay: Vec<f64> = (0..q).map(|_| rng.random_range(-3.0..3.0)).collect();
            let h = hscic_at(&distance_induced_kernel(&rx, &ax), &distance_induced_kernel(&ry, &ay), &d, &w)?.value;
            dist_to_kernel.compare(sign * h, g);
        }
        let (kx, ky) =
            (KernelSpec::Gaussian { bandwidth: rng.random_range(0.3..2.0) }, KernelSpec::Laplacian { scale: 1.0 });
        let h = hscic_at(&kx, &ky, &d, &w)?.value;
        let g = gcdcov_at(&kernel_induced_semimetric(&kx), &kernel_induced_semimetric(&ky), &d, &w)?.value;
        kernel_to_dist.compare(g, h);
    }
    out.push(dist_to_kernel.finish());
    out.push(kernel_to_dist.finish());

    let mut uncond = Check::new("hsic_equals_dcov", 1e-8, Scale::Relative);
    let two = Points::from_column(&[0.0, 1.0])?;
    let s2 = PairedSample::new(two.clone(), two)?;
    uncond.compare(dcov_v(&SemimetricSpec::Euclidean, &SemimetricSpec::Euclidean, &s2)?.value, 0.25);
    for _ in 0..10 {
        let n = rng.random_range(3..=40);
        let d = random_dataset(&mut rng, n, 2, 1, 1);
        let s = PairedSample::new(d.x().clone(), d.y().clone())?;
        let k = |dim: usize| distance_induced_kernel(&SemimetricSpec::Euclidean, &vec![0.0; dim]);
        let a = hsic_v(&k(2), &k(1), &s)?.value;
        let b = dcov_v(&SemimetricSpec::Euclidean, &SemimetricSpec::Euclidean, &s)?.value;
        uncond.compare(a, b);
    }
    out.push(uncond.finish());

    let mut expansion = Check::new("vstat_equals_naive_sum", 1e-9, Scale::Relative);
    let mut cross = Check::new("vstat_equals_kz_weighted_h_hat", 1e-9, Scale::Relative);
    for _ in 0..3 {
        let d = random_dataset(&mut rng, 8, 1, 2, 1);
        let s = SmoothingSpec::new(SmoothingShape::Gaussian, 0.8)?;
        let (kx, ky, kz) = (
            KernelSpec::Gaussian { bandwidth: 1.0 },
            KernelSpec::Laplacian { scale: 1.5 },
            KernelSpec::Gaussian { bandwidth: 0.7 },
        );
        let v = hscic_vstat(&kx, &ky, &kz, &d, &s)?.value;
        expansion.compare(v, naive_hscic_vstat(&kx, &ky, &kz, &d, &s)?);
        let w = crate::smoothing::weight_matrix(&s, d.z(), d.z())?;
        let mut total = 0.0;
        for j in 0..8 {
            for l in 0..8 {
                total += kz.eval(d.z().row(j), d.z().row(l))? * h_hat(&kx, &ky, &d, &w.row(j), &w.row(l))?;
            }
        }
        cross.compare(v, total / 64.0);
    }
    out.push(expansion.finish());
    out.push(cross.finish());

    let mut trace = Check::new("trace_equals_operator_oracle", 1e-8, Scale::Relative);
    for n in [8, 16, 32] {
        for lambda in [1e-4, 1e-2, 1.0] {
            let d = random_dataset(&mut rng, n, 1, 1, 1);
            let k = KernelSpec::Gaussian { bandwidth: 1.0 };
            let reg = RegularizationSpec::new(lambda)?;
            trace.compare(hscic_trace(&k, &k, &k, &d, reg)?.value, operator_hs_oracle(&k, &k, &k, &d, reg)?);
        }
    }
    out.push(trace.finish());

    let mut cf = Check::new("cf_quadrature_equals_h_hat", 1e-3, Scale::Relative);
    let grid = QuadratureGrid::default();
    for _ in 0..3 {
        let d = random_dataset(&mut rng, 5, 1, 1, 1);
        let w = random_weights(&mut rng, 5);
        let k = distance_induced_kernel(&SemimetricSpec::Euclidean, &[0.0]);
        cf.compare(cf_h_oracle(&d, &w, &w, &grid)?, h_hat(&k, &k, &d, &w, &w)?);
    }
    out.push(cf.finish());

    let mut weight_identity = Check::new("weight_identity_recovers_abs", 1e-4, Scale::Absolute);
    for x in [0.5, 1.0, 2.0] {
        weight_identity.compare(weight_identity_check(x, &grid), x);
    }
    out.push(weight_identity.finish());

    let mut cp = Check::new("cp_constant_closed_forms", 1e-12, Scale::Relative);
    cp.compare(cp_constant(1)?, std::f64::consts::PI);
    cp.compare(cp_constant(2)?, 2.0 * std::f64::consts::PI);
    cp.compare(cp_constant(3)?, std::f64::consts::PI.powi(2));
    out.push(cp.finish());

    let mut strat = Check::new("discrete_vstat_equals_stratified_sum", 1e-10, Scale::Relative);
    for k in 0..3u64 {
        let d = generate(&GeneratorSpec::new(Model::DiscreteZMixture { levels: 3 }, 40, seed.wrapping_add(k)))?;
        let (kx, ky) = (KernelSpec::Gaussian { bandwidth: 1.0 }, KernelSpec::Gaussian { bandwidth: 1.0 });
        let s = SmoothingSpec::new(SmoothingShape::Box, 0.5)?;
        strat
            .compare(hscic_vstat(&kx, &ky, &KernelSpec::DiracDiscrete, &d, &s)?.value, stratified_vstat(&kx, &ky, &d)?);
    }
    out.push(strat.finish());

    let all_passed = out.iter().all(|r| r.passed);
    Ok(VerifyReport { seed, all_passed, identities: out })
}
