mod common;

use std::f64::consts::PI;

use cimeter::conditional::h_hat;
use cimeter::geometry::{distance_induced_kernel, KernelSpec, SemimetricSpec};
use cimeter::oracles::{cf_h_oracle, cp_constant, operator_hs_oracle, weight_identity_check, QuadratureGrid};
use cimeter::trace::hscic_trace;
use cimeter::{Dataset, Error, Points, RegularizationSpec};
use common::{dataset, rel, rng};
use statrs::function::gamma::gamma;

#[test]
fn cp_matches_gamma_function() {
    for p in 1..=10 {
        let want = PI.powf((p as f64 + 1.0) / 2.0) / gamma((p as f64 + 1.0) / 2.0);
        assert!(rel(cp_constant(p).unwrap(), want) <= 1e-12, "p = {p}");
    }
    assert_eq!(cp_constant(3).unwrap(), PI * PI);
}

#[test]
fn weight_identity_examples() {
    let grid = QuadratureGrid::default();
    assert_eq!(weight_identity_check(0.0, &grid), 0.0);
    assert!((weight_identity_check(1.0, &grid) - 1.0).abs() <= 1e-4);
    assert!((weight_identity_check(2.0, &grid) - 2.0).abs() <= 2e-4);
}

#[test]
fn weight_identity_improves_as_grid_grows() {
    // Fixed log spacing: each extra block of nodes pushes the truncation point further out.
    let spacing = (1e4f64 / 1e-6).ln() / ((1 << 20) - 1) as f64;
    for x in [0.5, 1.0, 2.0] {
        let mut last = f64::INFINITY;
        for k in 2..=6 {
            let t = 10f64.powi(k);
            let points = ((t / 1e-6).ln() / spacing).round() as usize + 1;
            let grid = QuadratureGrid::new(t, points, 1e-6).unwrap();
            let err = (weight_identity_check(x, &grid) / x - 1.0).abs();
            assert!(err < last, "x = {x}, T = {t}: {err} >= {last}");
            last = err;
        }
    }
}

fn univariate(seed: u64, n: usize) -> Dataset {
    dataset(&mut rng(seed), n, 1, 1, 1)
}

#[test]
fn cf_oracle_degenerate_cases() {
    let grid = QuadratureGrid::new(1e3, 1 << 14, 1e-6).unwrap();
    let d = univariate(1, 5);
    let mut e1 = vec![0.0; 5];
    e1[0] = 1.0;
    let w = vec![0.2; 5];
    assert_eq!(cf_h_oracle(&d, &e1, &w, &grid).unwrap(), 0.0);
    let flat = Dataset::new(d.x().clone(), Points::from_column(&[1.5; 5]).unwrap(), d.z().clone()).unwrap();
    assert_eq!(cf_h_oracle(&flat, &w, &w, &grid).unwrap(), 0.0);
}

#[test]
fn cf_oracle_matches_closed_form() {
    let grid = QuadratureGrid::default();
    let k = distance_induced_kernel(&SemimetricSpec::Euclidean, &[0.0]);
    let d = univariate(2, 6);
    let w = vec![1.0 / 6.0; 6];
    let want = h_hat(&k, &k, &d, &w, &w).unwrap();
    assert!(rel(cf_h_oracle(&d, &w, &w, &grid).unwrap(), want) <= 1e-3);
}

#[test]
fn cf_oracle_refinement() {
    // At fixed T the error settles on the truncation floor 2 / (pi T) per axis,
    // so refinement is checked against a coarse grid rather than step by step.
    let k = distance_induced_kernel(&SemimetricSpec::Euclidean, &[0.0]);
    for seed in 0..5 {
        let d = univariate(10 + seed, 6);
        let w = vec![1.0 / 6.0; 6];
        let want = h_hat(&k, &k, &d, &w, &w).unwrap();
        let err = |points: usize| {
            rel(cf_h_oracle(&d, &w, &w, &QuadratureGrid::new(1e4, points, 1e-6).unwrap()).unwrap(), want)
        };
        let coarse = err(1 << 7);
        let fine = err(1 << 18);
        assert!(fine < coarse, "seed {seed}: {fine} >= {coarse}");
        assert!(fine <= 1e-3);
    }
}

#[test]
fn operator_oracle_degenerate_cases() {
    let k = KernelSpec::Gaussian { bandwidth: 1.0 };
    let reg = RegularizationSpec::new(0.1).unwrap();
    let one = Points::from_column(&[0.4]).unwrap();
    let single = Dataset::new(one.clone(), one.clone(), one).unwrap();
    assert_eq!(operator_hs_oracle(&k, &k, &k, &single, reg).unwrap(), 0.0);
    let d = univariate(3, 12);
    let flat = Dataset::new(d.x().clone(), Points::from_column(&[2.0; 12]).unwrap(), d.z().clone()).unwrap();
    assert!(operator_hs_oracle(&k, &k, &k, &flat, reg).unwrap().abs() <= 1e-12);
    let big = dataset(&mut rng(4), 257, 1, 1, 1);
    assert!(matches!(operator_hs_oracle(&k, &k, &k, &big, reg), Err(Error::Unsupported(_))));
}

#[test]
fn operator_oracle_matches_trace_up_to_64() {
    let mut r = rng(5);
    for n in [2, 5, 16, 40, 64] {
        let d = dataset(&mut r, n, 2, 1, 2);
        let (kx, ky, kz) = (
            KernelSpec::Laplacian { scale: 1.0 },
            KernelSpec::Gaussian { bandwidth: 0.7 },
            KernelSpec::Gaussian { bandwidth: 1.2 },
        );
        for lambda in [1e-4, 1e-2, 1.0] {
            let reg = RegularizationSpec::new(lambda).unwrap();
            let t = hscic_trace(&kx, &ky, &kz, &d, reg).unwrap().value;
            let o = operator_hs_oracle(&kx, &ky, &kz, &d, reg).unwrap();
            assert!(rel(t, o) <= 1e-8, "n = {n}, lambda = {lambda}: {t} vs {o}");
        }
    }
}
