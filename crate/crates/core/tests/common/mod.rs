#![allow(dead_code)]

use cimeter::{Dataset, Points};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn block(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Points {
    Points::new((0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect(), dim).unwrap()
}

pub fn dataset(rng: &mut ChaCha8Rng, n: usize, p: usize, q: usize, r: usize) -> Dataset {
    let x = block(rng, n, p);
    let y = block(rng, n, q);
    let z = block(rng, n, r);
    Dataset::new(x, y, z).unwrap()
}

pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}
