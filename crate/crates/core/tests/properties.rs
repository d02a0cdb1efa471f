mod common;

use cimeter::conditional::{gcdcov_at, h_hat, hscic_at};
use cimeter::geometry::{
    distance_induced_kernel, distance_matrix, eval_kernel, eval_semimetric, gram_matrix, kernel_induced_semimetric,
    KernelSpec, SemimetricSpec,
};
use cimeter::smoothing::{weight_matrix, SmoothingShape, SmoothingSpec};
use cimeter::trace::hscic_trace;
use cimeter::unconditional::{dcov_v, hsic_v, PairedSample};
use cimeter::{Dataset, Points, RegularizationSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn coords(n: usize, dim: usize) -> impl Strategy<Value = Points> {
    prop::collection::vec(-3.0f64..3.0, n * dim).prop_map(move |v| Points::new(v, dim).unwrap())
}

fn sample() -> impl Strategy<Value = Dataset> {
    (2usize..24, 1usize..4, 1usize..4, 1usize..3).prop_flat_map(|(n, p, q, r)| {
        (coords(n, p), coords(n, q), coords(n, r)).prop_map(|(x, y, z)| Dataset::new(x, y, z).unwrap())
    })
}

fn sample_with_weights() -> impl Strategy<Value = (Dataset, Vec<f64>, Vec<f64>)> {
    sample().prop_flat_map(|d| {
        let n = d.len();
        let w = prop::collection::vec(0.01f64..1.0, n);
        (Just(d), w.clone(), w).prop_map(|(d, a, b)| {
            let norm = |v: Vec<f64>| {
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<_>>()
            };
            (d, norm(a), norm(b))
        })
    })
}

fn metric() -> impl Strategy<Value = SemimetricSpec> {
    prop_oneof![
        Just(SemimetricSpec::Euclidean),
        (0.1f64..=2.0).prop_map(|alpha| SemimetricSpec::EuclideanPower { alpha }),
        (0.2f64..3.0)
            .prop_map(|bandwidth| SemimetricSpec::KernelInduced { base: Box::new(KernelSpec::Gaussian { bandwidth }) }),
    ]
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|bandwidth| KernelSpec::Gaussian { bandwidth }),
        (0.2f64..3.0).prop_map(|scale| KernelSpec::Laplacian { scale }),
        metric().prop_map(|m| KernelSpec::DistanceInduced { base: m, anchor: vec![] }),
    ]
}

fn psd(m: &DMatrix<f64>) -> bool {
    let min = m.clone().symmetric_eigen().eigenvalues.min();
    min >= -1e-8 * m.trace().abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_matrices_are_symmetric_psd(k in kernel(), pts in (1usize..20, 1usize..4).prop_flat_map(|(n, d)| coords(n, d))) {
        let g = gram_matrix(&k, &pts).unwrap();
        prop_assert_eq!(g.entries().clone(), g.entries().transpose());
        prop_assert!(psd(g.entries()));
    }

    #[test]
    fn distance_matrices_are_symmetric_with_zero_diagonal(m in metric(), pts in (1usize..20, 1usize..4).prop_flat_map(|(n, d)| coords(n, d))) {
        let dm = distance_matrix(&m, &pts).unwrap();
        let e = dm.entries();
        prop_assert_eq!(e.clone(), e.transpose());
        prop_assert!(e.diagonal().iter().all(|v| *v == 0.0));
        prop_assert!(e.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn distance_kernel_round_trip(m in metric(), a in prop::collection::vec(-3.0f64..3.0, 2), b in prop::collection::vec(-3.0f64..3.0, 2), theta in prop::collection::vec(-3.0f64..3.0, 2)) {
        let k = distance_induced_kernel(&m, &theta);
        let back = kernel_induced_semimetric(&k);
        let want = eval_semimetric(&m, &a, &b).unwrap();
        prop_assert!((eval_semimetric(&back, &a, &b).unwrap() - want).abs() <= 1e-12 * (1.0 + want));
        prop_assert_eq!(eval_kernel(&k, &theta, &a).unwrap(), 0.0);
        prop_assert!((eval_kernel(&k, &a, &a).unwrap() - 2.0 * eval_semimetric(&m, &a, &theta).unwrap()).abs() <= 1e-12 * (1.0 + want));
    }

    #[test]
    fn pointwise_measures_agree_and_are_nonnegative((d, w, _) in sample_with_weights(), rx in metric(), ry in metric()) {
        let g = gcdcov_at(&rx, &ry, &d, &w).unwrap().value;
        let tx: Vec<f64> = vec![0.7; d.x().dim()];
        let ty: Vec<f64> = vec![-1.1; d.y().dim()];
        let h0 = hscic_at(&distance_induced_kernel(&rx, &[]), &distance_induced_kernel(&ry, &[]), &d, &w).unwrap().value;
        let h1 = hscic_at(&distance_induced_kernel(&rx, &tx), &distance_induced_kernel(&ry, &ty), &d, &w).unwrap().value;
        prop_assert!(g >= 0.0 && h0 >= 0.0);
        prop_assert!((h0 - g).abs() <= 1e-8 * (1.0 + g));
        prop_assert!((h1 - h0).abs() <= 1e-10 * (1.0 + h0));
    }

    #[test]
    fn kernel_induced_direction((d, w, _) in sample_with_weights(), kx in kernel(), ky in kernel()) {
        let h = hscic_at(&kx, &ky, &d, &w).unwrap().value;
        let g = gcdcov_at(&kernel_induced_semimetric(&kx), &kernel_induced_semimetric(&ky), &d, &w).unwrap().value;
        prop_assert!((h - g).abs() <= 1e-8 * (1.0 + h));
    }

    #[test]
    fn cross_term_is_symmetric_with_nonnegative_diagonal((d, w1, w2) in sample_with_weights(), kx in kernel(), ky in kernel()) {
        let a = h_hat(&kx, &ky, &d, &w1, &w2).unwrap();
        let b = h_hat(&kx, &ky, &d, &w2, &w1).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        prop_assert!(h_hat(&kx, &ky, &d, &w1, &w1).unwrap() >= -1e-10);
    }

    #[test]
    fn unconditional_equivalence_any_anchor(d in sample(), theta in -3.0f64..3.0) {
        let s = PairedSample::new(d.x().clone(), d.y().clone()).unwrap();
        let e = SemimetricSpec::Euclidean;
        let kx = distance_induced_kernel(&e, &vec![theta; d.x().dim()]);
        let ky = distance_induced_kernel(&e, &vec![-theta; d.y().dim()]);
        let dc = dcov_v(&e, &e, &s).unwrap().value;
        prop_assert!((hsic_v(&kx, &ky, &s).unwrap().value - dc).abs() <= 1e-8 * dc.max(1e-300) + 1e-15);
    }

    #[test]
    fn dcov_is_invariant_under_rotation(d in sample(), angle in 0.0f64..6.3) {
        let rotate = |p: &Points| {
            if p.dim() < 2 {
                return Points::new(p.as_slice().iter().map(|v| -v).collect(), 1).unwrap();
            }
            let (c, s) = (angle.cos(), angle.sin());
            let mut v = p.as_slice().to_vec();
            for row in v.chunks_mut(p.dim()) {
                let (a, b) = (row[0], row[1]);
                row[0] = c * a - s * b;
                row[1] = s * a + c * b;
            }
            Points::new(v, p.dim()).unwrap()
        };
        let e = SemimetricSpec::Euclidean;
        let base = dcov_v(&e, &e, &PairedSample::new(d.x().clone(), d.y().clone()).unwrap()).unwrap().value;
        let turned = dcov_v(&e, &e, &PairedSample::new(rotate(d.x()), rotate(d.y())).unwrap()).unwrap().value;
        prop_assert!((base - turned).abs() <= 1e-10 * base.max(1e-300) + 1e-14);
    }

    #[test]
    fn unconditional_measures_ignore_row_order(d in sample(), shift in 0usize..64) {
        let n = d.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + shift) % n).filter(|_| true).collect();
        let mut seen = perm.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assume!(seen.len() == n);
        let dp = d.permute_rows(&perm);
        let s = PairedSample::new(d.x().clone(), d.y().clone()).unwrap();
        let sp = PairedSample::new(dp.x().clone(), dp.y().clone()).unwrap();
        let k = KernelSpec::Gaussian { bandwidth: 1.0 };
        let e = SemimetricSpec::Euclidean;
        let (h, hp) = (hsic_v(&k, &k, &s).unwrap().value, hsic_v(&k, &k, &sp).unwrap().value);
        let (c, cp) = (dcov_v(&e, &e, &s).unwrap().value, dcov_v(&e, &e, &sp).unwrap().value);
        prop_assert!((h - hp).abs() <= 1e-12 * h.max(1e-300) + 1e-16);
        prop_assert!((c - cp).abs() <= 1e-12 * c.max(1e-300) + 1e-16);
    }

    #[test]
    fn trace_estimate_ignores_row_order(d in sample(), lambda in prop::sample::select(vec![1e-4, 1e-2, 1.0])) {
        let n = d.len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let k = KernelSpec::Gaussian { bandwidth: 1.0 };
        let reg = RegularizationSpec::new(lambda).unwrap();
        let a = hscic_trace(&k, &k, &k, &d, reg).unwrap().value;
        let b = hscic_trace(&k, &k, &k, &d.permute_rows(&perm), reg).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300) + 1e-14);
    }

    #[test]
    fn weight_rows_are_stochastic(z in (1usize..30, 1usize..3).prop_flat_map(|(n, d)| coords(n, d)), t in 0.3f64..3.0, shape in prop::sample::select(vec![SmoothingShape::Gaussian, SmoothingShape::Epanechnikov, SmoothingShape::Box])) {
        let spec = SmoothingSpec::new(shape, t).unwrap();
        let w = weight_matrix(&spec, &z, &z).unwrap();
        for j in 0..z.len() {
            let row = w.row(j);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}
