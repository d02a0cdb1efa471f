use std::io::Write;

use cimeter::data::{generate, load_csv, read_csv, save_csv, write_csv, GeneratorSpec, Model};
use cimeter::{ColumnRoleMap, Error};

fn roles(x: &str, y: &str, z: &str) -> ColumnRoleMap {
    ColumnRoleMap::new(vec![x.into()], vec![y.into()], vec![z.into()]).unwrap()
}

fn read(text: &str, map: Option<&ColumnRoleMap>) -> cimeter::Result<cimeter::Dataset> {
    read_csv(text.as_bytes(), map, "mem")
}

#[test]
fn three_row_file() {
    let d = read("a,b,c\n1,2,3\n4,5,6\n7,8,9\n", Some(&roles("a", "b", "c"))).unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!((d.x().dim(), d.y().dim(), d.z().dim()), (1, 1, 1));
    assert_eq!(d.y().as_slice(), &[2.0, 5.0, 8.0]);
}

#[test]
fn columns_are_picked_by_name() {
    let map = ColumnRoleMap::parse("x=c,a;y=b;z=d").unwrap();
    let d = read("a,b,c,d,unused\n1,2,3,4,x\n5,6,7,8,y\n", Some(&map)).unwrap();
    assert_eq!(d.x().as_slice(), &[3.0, 1.0, 7.0, 5.0]);
    assert_eq!(d.z().as_slice(), &[4.0, 8.0]);
}

#[test]
fn nan_is_reported_with_location() {
    let err = read("a,b,c\n1,2,3\n4,NaN,6\n", Some(&roles("a", "b", "c"))).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Input(_)));
    assert!(msg.contains("row 2") && msg.contains("'b'"), "{msg}");
}

#[test]
fn non_numeric_cell_is_reported_with_location() {
    let msg = read("a,b,c\n1,2,3\n4,5,six\n", Some(&roles("a", "b", "c"))).unwrap_err().to_string();
    assert!(msg.contains("row 2") && msg.contains("'c'") && msg.contains("six"), "{msg}");
}

#[test]
fn missing_column_and_empty_file() {
    let msg = read("a,b\n1,2\n", Some(&roles("a", "b", "c"))).unwrap_err().to_string();
    assert!(msg.contains("missing column 'c'"), "{msg}");
    assert!(read("", Some(&roles("a", "b", "c"))).is_err());
    assert!(read("a,b,c\n", Some(&roles("a", "b", "c"))).is_err());
    assert!(read("a,b,c\n1,2,3\n", None).is_err());
}

#[test]
fn round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    for (k, model) in [
        Model::GaussianCi,
        Model::GaussianDep { c: 0.7 },
        Model::PostnonlinearCi,
        Model::DiscreteZMixture { levels: 4 },
    ]
    .into_iter()
    .enumerate()
    {
        let r = if matches!(model, Model::DiscreteZMixture { .. }) { 1 } else { 2 };
        let d = generate(&GeneratorSpec::new(model, 37, 90 + k as u64).with_dims(3, 2, r)).unwrap();
        let path = dir.path().join(format!("d{k}.csv"));
        save_csv(&d, &path).unwrap();
        let back = load_csv(&path, None).unwrap();
        assert_eq!(back, d, "{model}");
        assert_eq!(back.is_z_discrete(), d.is_z_discrete());
    }
}

#[test]
fn explicit_roles_override_the_file() {
    let d = generate(&GeneratorSpec::new(Model::GaussianCi, 4, 1)).unwrap();
    let mut buf = Vec::new();
    write_csv(&d, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().nth(1).unwrap().to_owned();
    let cols: Vec<&str> = header.split(',').collect();
    let swapped = roles(cols[1], cols[0], cols[2]);
    let back = read(&text, Some(&swapped)).unwrap();
    assert_eq!(back.x(), d.y());
    assert_eq!(back.y(), d.x());
}

#[test]
fn extreme_values_survive_a_round_trip() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "a,b,c\n1e-310,-0.0,1.7976931348623157e308\n0.1,0.30000000000000004,-2.5e-8").unwrap();
    let d = load_csv(f.path(), Some(&roles("a", "b", "c"))).unwrap();
    let out = tempfile::NamedTempFile::new().unwrap();
    save_csv(&d, out.path()).unwrap();
    let back = load_csv(out.path(), None).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(back.x().as_slice()), bits(d.x().as_slice()));
    assert_eq!(bits(back.y().as_slice()), bits(d.y().as_slice()));
    assert_eq!(bits(back.z().as_slice()), bits(d.z().as_slice()));
}

#[test]
fn generators_are_deterministic() {
    let spec = GeneratorSpec::new(Model::PostnonlinearCi, 50, 3).with_dims(2, 2, 3);
    assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    let ci = generate(&GeneratorSpec::new(Model::GaussianCi, 50, 3)).unwrap();
    let dep0 = generate(&GeneratorSpec::new(Model::GaussianDep { c: 0.0 }, 50, 3)).unwrap();
    assert_eq!(ci, dep0);
    assert!(generate(&GeneratorSpec::new(Model::GaussianCi, 0, 3)).is_err());
    assert!(generate(&GeneratorSpec::new(Model::DiscreteZMixture { levels: 3 }, 10, 3).with_dims(1, 1, 2)).is_err());
}

fn residual(v: &[f64], z: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let (mv, mz) = (v.iter().sum::<f64>() / n, z.iter().sum::<f64>() / n);
    let szz: f64 = z.iter().map(|a| (a - mz).powi(2)).sum();
    let svz: f64 = v.iter().zip(z).map(|(a, b)| (a - mv) * (b - mz)).sum();
    let beta = svz / szz;
    v.iter().zip(z).map(|(a, b)| a - mv - beta * (b - mz)).collect()
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    dot(a, b) / (dot(a, a) * dot(b, b)).sqrt()
}

#[test]
fn coupled_model_has_partial_correlation() {
    for seed in 0..5 {
        let d = generate(&GeneratorSpec::new(Model::GaussianDep { c: 1.0 }, 100, seed)).unwrap();
        let z = d.z().as_slice();
        let pc = correlation(&residual(d.x().as_slice(), z), &residual(d.y().as_slice(), z));
        assert!(pc.abs() >= 0.3, "seed {seed}: {pc}");
    }
    let d = generate(&GeneratorSpec::new(Model::GaussianCi, 2000, 11)).unwrap();
    let z = d.z().as_slice();
    assert!(correlation(&residual(d.x().as_slice(), z), &residual(d.y().as_slice(), z)).abs() < 0.1);
}

#[test]
fn discrete_labels() {
    let d = generate(&GeneratorSpec::new(Model::DiscreteZMixture { levels: 3 }, 200, 5)).unwrap();
    assert!(d.is_z_discrete());
    assert!(d.z().as_slice().iter().all(|v| [0.0, 1.0, 2.0].contains(v)));
}
