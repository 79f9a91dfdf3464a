mod common;

use common::*;
use mob_core::covering::{fps_select, kfold_nn_cover, ranked_candidates};
use mob_core::embedding::{cosine_matrix, dot, euclid_from_cos};
use mob_core::hausdorff::{coupling, directed_hausdorff, hausdorff};
use mob_core::{mob_prune, EmbeddingSet, IndexList, Metric, PruneConfig};
use proptest::prelude::*;

fn set_strategy(max_n: usize, d: usize) -> impl Strategy<Value = EmbeddingSet> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(-1.0f64..1.0, n * d)
            .prop_filter("rows must be nonzero", move |v| {
                v.chunks(d)
                    .all(|r| r.iter().map(|x| x * x).sum::<f64>() > 1e-6)
            })
            .prop_map(move |data| EmbeddingSet::new(data, n, d).unwrap())
    })
}

fn unit_set(max_n: usize, d: usize) -> impl Strategy<Value = EmbeddingSet> {
    set_strategy(max_n, d).prop_map(|s| s.normalize().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn squared_distance_is_two_minus_two_cos(s in unit_set(8, 5)) {
        for i in 0..s.n() {
            for j in 0..s.n() {
                let e = euclid(s.row(i), s.row(j));
                prop_assert!((e * e - (2.0 - 2.0 * dot(s.row(i), s.row(j)))).abs() <= 1e-9);
                let c = dot(s.row(i), s.row(j)).clamp(-1.0, 1.0);
                prop_assert!((euclid_from_cos(c) - e).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn normalize_is_idempotent(s in set_strategy(8, 4)) {
        let once = s.normalize().unwrap();
        let twice = once.normalize().unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn cosine_matrix_transposes(a in unit_set(6, 3), b in unit_set(6, 3)) {
        let ab = cosine_matrix(&a, &b).unwrap();
        let ba = cosine_matrix(&b, &a).unwrap();
        for i in 0..a.n() {
            for j in 0..b.n() {
                prop_assert!((ab.get(i, j) - ba.get(j, i)).abs() <= 1e-12);
                prop_assert!((ab.get(i, j) - dot(a.row(i), b.row(j))).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn coupling_is_symmetric(a in set_strategy(10, 3), b in set_strategy(10, 3)) {
        for m in [Metric::RawEuclidean, Metric::NormalizedEuclidean] {
            let ab = coupling(&a, &b, m, None).unwrap().eta;
            let ba = coupling(&b, &a, m, None).unwrap().eta;
            prop_assert_eq!(ab, ba);
        }
        prop_assert_eq!(hausdorff(&a, &a, Metric::RawEuclidean).unwrap(), 0.0);
    }

    #[test]
    fn hausdorff_triangle(a in set_strategy(8, 3), b in set_strategy(8, 3), c in set_strategy(8, 3)) {
        let m = Metric::RawEuclidean;
        let ac = hausdorff(&a, &c, m).unwrap();
        let ab = hausdorff(&a, &b, m).unwrap();
        let bc = hausdorff(&b, &c, m).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn containment_shrinks_directed_distance(a in set_strategy(8, 3), b in set_strategy(8, 3), extra in set_strategy(8, 3)) {
        let mut rows: Vec<Vec<f64>> = b.rows().map(|r| r.to_vec()).collect();
        rows.extend(extra.rows().map(|r| r.to_vec()));
        let bigger = EmbeddingSet::from_rows(&rows).unwrap();
        let m = Metric::RawEuclidean;
        prop_assert!(directed_hausdorff(&a, &bigger, m).unwrap() <= directed_hausdorff(&a, &b, m).unwrap());
    }

    #[test]
    fn fps_gaps_never_increase(v in unit_set(24, 4), budget in 1usize..12) {
        let budget = budget.min(v.n());
        let out = fps_select(&v, &IndexList::empty(), budget).unwrap();
        for w in out.step_gaps.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(out.residual_gap <= *out.step_gaps.last().unwrap());
        // the residual cosine gap and the Hausdorff radius describe the same point
        let from_gap = (2.0 * out.residual_gap.max(0.0)).sqrt();
        prop_assert!((from_gap - out.eps_v).abs() <= 1e-9);
    }

    #[test]
    fn fps_prefix_property(v in unit_set(24, 4), a in 1usize..10, b in 1usize..10) {
        let (small, large) = (a.min(b).min(v.n()), a.max(b).min(v.n()));
        let short = fps_select(&v, &IndexList::empty(), small).unwrap();
        let long = fps_select(&v, &IndexList::empty(), large).unwrap();
        prop_assert_eq!(short.selected.as_slice(), &long.selected.as_slice()[..small]);
        prop_assert!(long.eps_v <= short.eps_v);
    }

    #[test]
    fn ranked_prefixes_shrink_prompt_radius(v in unit_set(20, 4), p in unit_set(5, 4), k in 1usize..4) {
        let ranked = ranked_candidates(&v, &p, k).unwrap();
        let mut prev = f64::INFINITY;
        for m in 1..=ranked.len() {
            let idx: Vec<usize> = ranked[..m].iter().map(|c| c.index).collect();
            let s = v.select(&idx).unwrap();
            let r = directed_hausdorff(&p, &s, Metric::NormalizedEuclidean).unwrap();
            prop_assert!(r <= prev);
            prev = r;
        }
        let cover = kfold_nn_cover(&v, &p, k, ranked.len()).unwrap();
        prop_assert_eq!(cover.candidate_count, ranked.len());
    }

    #[test]
    fn selection_shape(v in set_strategy(30, 4), p in set_strategy(6, 4), k in 1usize..40, frac in 0.0f64..=1.0, fold in 1usize..4) {
        let kp = (k as f64 * frac) as usize;
        let cfg = PruneConfig::manual(k, kp, fold).unwrap();
        let r = mob_prune(&v, &p, &cfg).unwrap();
        let total = k.min(v.n());
        prop_assert_eq!(r.prompt_centers.len() + r.visual_centers.len(), total);
        prop_assert!(r.prompt_centers.len() <= kp);
        prop_assert_eq!(r.shortfall_reassigned, kp.min(total) - r.prompt_centers.len());
        let all = r.retained();
        prop_assert!(IndexList::new(all.clone(), v.n()).is_ok());
        prop_assert!(r.eps_p_directed <= r.eps_p_symmetric);
        let s = v.select(&all).unwrap();
        let direct = directed_hausdorff(&v, &s, Metric::NormalizedEuclidean).unwrap();
        prop_assert!((direct - r.eps_v).abs() <= 1e-9);
        if total == v.n() {
            prop_assert_eq!(r.eps_v, 0.0);
        }
        prop_assert_eq!(&r, &mob_prune(&v, &p, &cfg).unwrap());
    }
}

#[test]
fn eps_v_shrinks_with_visual_budget_under_fixed_seed() {
    let mut r = rng(21);
    for _ in 0..50 {
        let v = random_unit_set(&mut r, 30, 5);
        let p = random_unit_set(&mut r, 4, 5);
        let seed = kfold_nn_cover(&v, &p, 1, 3).unwrap().centers;
        let mut prev = f64::INFINITY;
        for kv in 0..=(30 - seed.len()) {
            let e = fps_select(&v, &seed, kv).unwrap().eps_v;
            assert!(e <= prev);
            prev = e;
        }
        assert_eq!(prev, 0.0);
    }
}

#[test]
fn determinism_across_threads() {
    let mut r = rng(22);
    let v = random_set(&mut r, 200, 16);
    let p = random_set(&mut r, 12, 16);
    let cfg = PruneConfig::manual(40, 16, 2).unwrap();
    let base = mob_prune(&v, &p, &cfg).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (v, p) = (v.clone(), p.clone());
            std::thread::spawn(move || mob_prune(&v, &p, &cfg).unwrap())
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), base);
    }
}
