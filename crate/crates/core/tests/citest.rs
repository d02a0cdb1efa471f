mod common;

use cimeter::citest::{
    ks_uniform_distance, local_permutation_test, neighborhoods, replicate_rng, size_power_experiment,
    within_group_permutation, TestConfig,
};
use cimeter::data::{generate, GeneratorSpec, Model};
use cimeter::par::{with_policy, Parallelism};
use cimeter::{Dataset, Measure, Points};
use common::{dataset, rng};

fn config(statistic: Measure, b: usize, seed: u64) -> TestConfig {
    TestConfig { statistic, b, seed, ..TestConfig::default() }
}

#[test]
fn reports_do_not_depend_on_parallelism() {
    let d = generate(&GeneratorSpec::new(Model::GaussianDep { c: 0.3 }, 60, 4).with_dims(2, 1, 2)).unwrap();
    for m in [Measure::HscicTrace, Measure::AvgHscic, Measure::HscicVstat, Measure::GcdcovAvg] {
        let cfg = config(m, 40, 9);
        let seq = with_policy(Parallelism::Sequential, || local_permutation_test(&cfg, &d)).unwrap();
        let par = with_policy(Parallelism::Parallel, || local_permutation_test(&cfg, &d)).unwrap();
        let again = local_permutation_test(&cfg, &d).unwrap();
        assert_eq!(seq, par, "{m}");
        assert_eq!(seq, again, "{m}");
        assert!(seq.p_value > 0.0 && seq.p_value <= 1.0);
        assert_eq!(seq.replicate_values.len(), 40);
    }
}

#[test]
fn permutations_stay_inside_neighborhoods() {
    let mut r = rng(3);
    let d = dataset(&mut r, 47, 1, 1, 2);
    let groups = neighborhoods(d.z(), 5).unwrap();
    let mut all: Vec<usize> = groups.iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..47).collect::<Vec<_>>());
    assert!(groups.iter().all(|g| g.len() >= 5));
    let mut owner = vec![0; 47];
    for (k, g) in groups.iter().enumerate() {
        for &i in g {
            owner[i] = k;
        }
    }
    for b in 0..50 {
        let perm = within_group_permutation(&groups, 47, &mut replicate_rng(11, b));
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..47).collect::<Vec<_>>());
        assert!(perm.iter().enumerate().all(|(i, &j)| owner[i] == owner[j]));
        let moved = d.permute_y(&perm);
        let mut ys: Vec<u64> = moved.y().as_slice().iter().map(|v| v.to_bits()).collect();
        let mut orig: Vec<u64> = d.y().as_slice().iter().map(|v| v.to_bits()).collect();
        ys.sort_unstable();
        orig.sort_unstable();
        assert_eq!(ys, orig);
    }
}

#[test]
fn constant_y_gives_p_one() {
    let mut r = rng(8);
    let d = dataset(&mut r, 30, 1, 1, 1);
    let flat = Dataset::new(d.x().clone(), Points::from_column(&[0.25; 30]).unwrap(), d.z().clone()).unwrap();
    for m in [Measure::HscicTrace, Measure::AvgHscic] {
        let report = local_permutation_test(&config(m, 19, 1), &flat).unwrap();
        assert!(report.statistic_value.abs() <= 1e-12, "{m}");
        assert!(report.replicate_values.iter().all(|v| *v == report.statistic_value));
        assert_eq!(report.p_value, 1.0);
    }
}

#[test]
fn strong_dependence_with_minimum_replicates() {
    let d = generate(&GeneratorSpec::new(Model::GaussianDep { c: 3.0 }, 100, 2)).unwrap();
    let report = local_permutation_test(&config(Measure::HscicTrace, 19, 5), &d).unwrap();
    assert!(report.replicate_values.iter().all(|v| *v < report.statistic_value));
    assert_eq!(report.p_value, 0.05);
    assert!(report.reject);
}

#[test]
fn invalid_configs_are_rejected() {
    let d = generate(&GeneratorSpec::new(Model::GaussianCi, 30, 0)).unwrap();
    assert!(local_permutation_test(&config(Measure::HscicTrace, 18, 0), &d).is_err());
    assert!(local_permutation_test(&config(Measure::Hsic, 19, 0), &d).is_err());
    assert!(local_permutation_test(&TestConfig { knn: 16, ..TestConfig::default() }, &d).is_err());
    assert!(local_permutation_test(&TestConfig { knn: 1, ..TestConfig::default() }, &d).is_err());
    assert!(local_permutation_test(&TestConfig { alpha: 1.0, ..TestConfig::default() }, &d).is_err());
}

#[test]
fn single_run_experiment() {
    let summary =
        size_power_experiment(&config(Measure::HscicTrace, 19, 0), &GeneratorSpec::new(Model::GaussianCi, 40, 0), 1)
            .unwrap();
    assert_eq!(summary.runs, 1);
    assert!(summary.rejections <= 1);
    assert_eq!(summary.p_values.len(), 1);
}

#[test]
fn null_p_values_are_close_to_uniform() {
    let summary = size_power_experiment(
        &config(Measure::HscicTrace, 200, 1000),
        &GeneratorSpec::new(Model::GaussianCi, 100, 1000),
        200,
    )
    .unwrap();
    let ks = ks_uniform_distance(&summary.p_values);
    assert!(ks <= 0.15, "KS distance {ks}");
    assert!((0.02..=0.10).contains(&summary.rejection_rate), "size {}", summary.rejection_rate);
}

#[test]
fn coupled_model_has_power() {
    let summary = size_power_experiment(
        &config(Measure::HscicTrace, 200, 7),
        &GeneratorSpec::new(Model::GaussianDep { c: 1.0 }, 100, 7),
        50,
    )
    .unwrap();
    assert!(summary.rejection_rate >= 0.5, "power {}", summary.rejection_rate);
}
