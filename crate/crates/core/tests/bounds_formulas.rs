mod common;

use common::*;
use mob_core::bounds::{
    cost_model, lemma1_bound, relaxed_bound, theorem1_floor, theorem2_bound, BoundParams,
};
use mob_core::{EmbeddingSet, Metric};
use rand::Rng;

fn subset(x: &EmbeddingSet, r: &mut rand_chacha::ChaCha8Rng) -> EmbeddingSet {
    let m = r.random_range(1..=x.n());
    let idx = rand::seq::index::sample(r, x.n(), m).into_vec();
    x.select(&idx).unwrap()
}

#[test]
fn lemma1_matches_transcription() {
    let mut r = rng(41);
    for _ in 0..50 {
        let d = r.random_range(2..=6);
        let nv = r.random_range(2..=30);
        let np = r.random_range(1..=8);
        let v = random_set(&mut r, nv, d);
        let p = random_set(&mut r, np, d);
        let s = subset(&v, &mut r);
        let c = r.random_range(1.0..3.0);
        let (sv, vp, sp) = (
            brute_symmetric(&s, &v),
            brute_symmetric(&v, &p),
            brute_symmetric(&s, &p),
        );
        let want = c * f64::max(f64::min(sv, vp), f64::min(sv, sp));
        let got = lemma1_bound(&s, &v, &p, c, Metric::RawEuclidean).unwrap();
        assert!(rel_close(got, want, 1e-9));
        assert!(got <= c * sv + 1e-12);
        assert!(got <= c * sv.max(sp).max(vp) + 1e-12);
        assert_eq!(
            lemma1_bound(&v, &v, &p, c, Metric::RawEuclidean).unwrap(),
            0.0
        );
    }
}

#[test]
fn relaxed_bound_dominates_lemma1() {
    let mut r = rng(42);
    for _ in 0..50 {
        let d = r.random_range(2..=6);
        let nv = r.random_range(4..=30);
        let np = r.random_range(1..=8);
        let v = random_set(&mut r, nv, d);
        let p = random_set(&mut r, np, d);
        let sp = subset(&v, &mut r);
        let sv = subset(&v, &mut r);
        let mut rows: Vec<Vec<f64>> = sp.rows().map(|x| x.to_vec()).collect();
        rows.extend(sv.rows().map(|x| x.to_vec()));
        let s = EmbeddingSet::from_rows(&rows).unwrap();
        let eta = brute_symmetric(&v, &p) * r.random_range(1.0..1.5);
        let m = Metric::RawEuclidean;
        let relaxed = relaxed_bound(&sp, &sv, &p, &v, 1.0, eta, m).unwrap();
        assert!(relaxed + 1e-12 >= lemma1_bound(&s, &v, &p, 1.0, m).unwrap());
        let want = brute_symmetric(&sp, &p).max(brute_symmetric(&sv, &v)) + eta;
        assert!(rel_close(relaxed, want, 1e-9));
    }
    let v = EmbeddingSet::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
    let got = relaxed_bound(&v, &v, &v, &v, 2.0, 0.0, Metric::RawEuclidean).unwrap();
    assert_eq!(got, 0.0);
}

fn fitted_like() -> BoundParams {
    BoundParams {
        lipschitz_c: 1.0,
        eta: 0.4,
        d_eff: 1.8,
        a: 0.6,
        b: 1.4,
        a_prime: 1.2,
        b_prime: 3.0,
        z: 2.5,
    }
}

#[test]
fn floor_monotone_in_budget_and_coupling() {
    let base = fitted_like();
    let mut prev = f64::INFINITY;
    for k in 1..500 {
        let f = theorem1_floor(k, &base).product_floor;
        assert!(f <= prev);
        prev = f;
    }
    let mut prev = 0.0;
    for step in 0..100 {
        let params = BoundParams {
            eta: step as f64 * 0.02,
            ..base
        };
        let f = theorem1_floor(64, &params).product_floor;
        assert!(f >= prev);
        prev = f;
    }
}

#[test]
fn upper_bound_monotone_in_both_budgets() {
    let params = fitted_like();
    for kv in [1usize, 4, 16, 64] {
        let mut prev = f64::INFINITY;
        for kp in 1..200 {
            let b = theorem2_bound(&params, 2, 10, kp, kv).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }
    for kp in [1usize, 4, 16, 64] {
        let mut prev = f64::INFINITY;
        for kv in 1..200 {
            let b = theorem2_bound(&params, 2, 10, kp, kv).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }
}

/// Agreement to the precision a two-significant-figure table can carry: the
/// computed value lies within one unit of the reported last digit.
fn agrees_to_two_figures(computed: f64, reported: f64) -> bool {
    let unit = 10f64.powf(reported.abs().log10().floor() - 1.0);
    (computed - reported).abs() < unit
}

#[test]
fn cost_table_entries() {
    let hausdorff = [(576u64, 2.3e-5), (2880, 1.2e-4)];
    for (n, reported) in hausdorff {
        for k in [1u64, 64, 320] {
            let r = cost_model(n, 10, k, 4096).unwrap();
            assert!(agrees_to_two_figures(r.tflops_hausdorff(), reported));
        }
    }
    let mob = [
        (576u64, 64u64, 1.7e-4),
        (576, 128, 3.3e-4),
        (576, 192, 4.8e-4),
        (2880, 320, 3.9e-3),
        (2880, 640, 7.6e-3),
        (2880, 960, 1.1e-2),
    ];
    for (n, k, reported) in mob {
        let r = cost_model(n, 10, k, 4096).unwrap();
        assert!(
            agrees_to_two_figures(r.tflops_mob(), reported),
            "N={n} K={k}: {} vs {reported}",
            r.tflops_mob()
        );
    }
    assert!(!agrees_to_two_figures(
        2.0 * 576.0 * 10.0 * 4096.0 * 1e-12,
        2.3e-5
    ));
}
