#![allow(dead_code)]

use mob_core::EmbeddingSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in [-1, 1).
pub fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingSet {
    let data = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    EmbeddingSet::new(data, n, d).unwrap()
}

pub fn random_unit_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingSet {
    random_set(rng, n, d).normalize().unwrap()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Two nested loops, nothing shared with the library.
pub fn brute_directed(a: &EmbeddingSet, b: &EmbeddingSet) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.n() {
        let mut best = f64::INFINITY;
        for j in 0..b.n() {
            best = best.min(euclid(a.row(i), b.row(j)));
        }
        worst = worst.max(best);
    }
    worst
}

pub fn brute_symmetric(a: &EmbeddingSet, b: &EmbeddingSet) -> f64 {
    brute_directed(a, b).max(brute_directed(b, a))
}

pub fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300)
}
