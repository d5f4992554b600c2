#![allow(dead_code)]

use qualest::moments::{Design, Population, PopulationMoments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every `n`-subset of `0..size`, found by scanning bitmasks.
pub fn subsets(size: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    assert!(size <= 20);
    (0u32..(1 << size))
        .filter(move |m| m.count_ones() as usize == n)
        .map(move |m| (0..size).filter(|i| m >> i & 1 == 1).collect())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased variance with divisor `len - 1`.
pub fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let sa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>().sqrt();
    let sb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>().sqrt();
    cov / (sa * sb)
}

pub fn codes(pop: &Population<f64>) -> Vec<f64> {
    pop.phi()
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect()
}

/// A population of `size` units, `attributes` of them carrying the attribute,
/// with `x` positive and its coefficient of variation set to `cx`.
pub fn random_population(
    rng: &mut ChaCha8Rng,
    size: usize,
    attributes: usize,
    cx: f64,
) -> Population<f64> {
    let mut phi = vec![false; size];
    let mut order: Vec<usize> = (0..size).collect();
    for i in 0..attributes {
        let j = rng.random_range(i..size);
        order.swap(i, j);
        phi[order[i]] = true;
    }
    let lift = rng.random_range(-1.5..1.5);
    let raw: Vec<f64> = phi
        .iter()
        .map(|&b| rng.random_range(-1.0..1.0) + if b { lift } else { 0.0 })
        .collect();
    let (m, s) = (mean(&raw), var(&raw).sqrt());
    let level = 10.0;
    let x = raw
        .iter()
        .map(|v| level + (v - m) / s * cx * level)
        .collect();
    Population::new(phi, x).unwrap()
}

/// Internally consistent summary moments and a design, drawn at random.
pub fn random_moments(rng: &mut ChaCha8Rng) -> (PopulationMoments<f64>, Design<f64>) {
    let size = rng.random_range(20..200usize);
    let attributes = rng.random_range(2..size - 1);
    let p = attributes as f64 / size as f64;
    let c_phi = (size as f64 * (1.0 - p) / ((size - 1) as f64 * p)).sqrt();
    let m = PopulationMoments::from_summary(
        p,
        rng.random_range(1.0..50.0),
        c_phi,
        rng.random_range(0.05..1.0),
        rng.random_range(-0.95..0.95),
    )
    .unwrap();
    let n = rng.random_range(2..size);
    (m, Design::new(n, size).unwrap())
}
