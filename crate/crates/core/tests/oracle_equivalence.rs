mod common;

use common::*;
use mob_core::covering::{budget_heuristic, fps_select, kfold_nn_cover, CouplingClass, Tier};
use mob_core::hausdorff::{calibrate_tau, coupling, directed_hausdorff};
use mob_core::oracle::{optimal_kcenter_radius, reference_coupling, reference_mob};
use mob_core::{mob_prune, IndexList, Metric, PruneConfig};
use rand::Rng;

#[test]
fn hausdorff_matches_double_loop() {
    let mut r = rng(11);
    for _ in 0..200 {
        let d = r.random_range(1..=8);
        let a = {
            let m = r.random_range(1..=64);
            random_set(&mut r, m, d)
        };
        let b = {
            let m = r.random_range(1..=64);
            random_set(&mut r, m, d)
        };
        let lib = coupling(&a, &b, Metric::RawEuclidean, None).unwrap();
        assert!(rel_close(lib.eta, brute_symmetric(&a, &b), 1e-9));
        assert!(rel_close(lib.h_v_to_p, brute_directed(&a, &b), 1e-9));
        let dir = directed_hausdorff(&b, &a, Metric::RawEuclidean).unwrap();
        assert!(rel_close(dir, brute_directed(&b, &a), 1e-9));

        let (an, bn) = (a.normalize().unwrap(), b.normalize().unwrap());
        let lib_n = coupling(&a, &b, Metric::NormalizedEuclidean, None).unwrap();
        assert!(rel_close(lib_n.eta, brute_symmetric(&an, &bn), 1e-9));
    }
}

#[test]
fn coupling_matches_reference_transcription() {
    let mut r = rng(12);
    for _ in 0..50 {
        let d = r.random_range(2..=8);
        let v = {
            let m = r.random_range(1..=48);
            random_set(&mut r, m, d)
        };
        let p = {
            let m = r.random_range(1..=8);
            random_set(&mut r, m, d)
        };
        for metric in [Metric::RawEuclidean, Metric::NormalizedEuclidean] {
            let lib = coupling(&v, &p, metric, None).unwrap();
            let reference = reference_coupling(&v, &p, metric).unwrap();
            assert!(rel_close(lib.eta, reference.eta, 1e-9));
            assert!(rel_close(lib.h_p_to_v, reference.h_p_to_v, 1e-9));
        }
    }
}

#[test]
fn fps_within_twice_optimal_kcenter() {
    let mut r = rng(13);
    for _ in 0..100 {
        let n = r.random_range(2..=12);
        let k = r.random_range(1..=4.min(n));
        let d = r.random_range(2..=6);
        let x = random_unit_set(&mut r, n, d);
        let fps = fps_select(&x, &IndexList::empty(), k).unwrap();
        let opt = optimal_kcenter_radius(&x, k).unwrap();
        assert!(
            fps.eps_v <= 2.0 * opt + 1e-12,
            "fps {} opt {}",
            fps.eps_v,
            opt
        );
    }
}

#[test]
fn full_nn_retention_is_exact() {
    let mut r = rng(14);
    for _ in 0..100 {
        let d = r.random_range(2..=8);
        let v = {
            let m = r.random_range(2..=40);
            random_unit_set(&mut r, m, d)
        };
        let p = {
            let m = r.random_range(1..=6);
            random_unit_set(&mut r, m, d)
        };
        let cover = kfold_nn_cover(&v, &p, 1, usize::MAX).unwrap();
        assert_eq!(cover.centers.len(), cover.candidate_count);
        let sp = v.select(cover.centers.as_slice()).unwrap();
        let got = directed_hausdorff(&p, &sp, Metric::NormalizedEuclidean).unwrap();
        let want = directed_hausdorff(&p, &v, Metric::NormalizedEuclidean).unwrap();
        assert_eq!(got, want);

        let cfg = PruneConfig::manual(v.n(), cover.candidate_count, 1).unwrap();
        let res = mob_prune(&v, &p, &cfg).unwrap();
        assert!(res.eps_p_directed <= res.eta);
    }
}

/// Every `(K_p, k)` the η-prior tables produce for small budgets.
fn scaled_tables(n: usize) -> Vec<PruneConfig> {
    let mut out = Vec::new();
    for k in [8usize, 12, 16, 24, 32, 48] {
        if k > n {
            continue;
        }
        for class in [CouplingClass::Strong, CouplingClass::Weak] {
            for tier in [Tier::High, Tier::Mid, Tier::Low] {
                out.push(PruneConfig::from_eta_prior(k, class, tier).unwrap());
            }
        }
    }
    out
}

#[test]
fn selector_matches_reference_transcription() {
    let mut r = rng(15);
    let mut compared = 0;
    for _ in 0..50 {
        let d = r.random_range(2..=8);
        let n = r.random_range(8..=48);
        let v = random_set(&mut r, n, d);
        let p = {
            let m = r.random_range(1..=8);
            random_set(&mut r, m, d)
        };
        let mut configs = scaled_tables(n);
        configs.push(PruneConfig::manual(n.min(6), 0, 1).unwrap());
        configs.push(PruneConfig::manual(n, n / 2, 2).unwrap());
        for cfg in configs {
            let lib = mob_prune(&v, &p, &cfg).unwrap();
            let reference = reference_mob(&v, &p, &cfg).unwrap();
            assert_eq!(lib.prompt_centers, reference.prompt_centers, "{cfg:?}");
            assert_eq!(lib.visual_centers, reference.visual_centers, "{cfg:?}");
            assert_eq!(lib.shortfall_reassigned, reference.shortfall_reassigned);
            assert!(rel_close(lib.eps_v, reference.eps_v, 1e-9) || lib.eps_v == reference.eps_v);
            assert!(rel_close(
                lib.eps_p_symmetric,
                reference.eps_p_symmetric,
                1e-9
            ));
            assert!(rel_close(lib.eta, reference.eta, 1e-9));
            compared += 1;
        }
    }
    assert!(compared >= 50);
}

#[test]
fn kfold_cover_matches_reference_prompt_centers() {
    let mut r = rng(16);
    for _ in 0..50 {
        let d = r.random_range(2..=6);
        let n = r.random_range(2..=40);
        let v = random_unit_set(&mut r, n, d);
        let p = {
            let m = r.random_range(1..=6);
            random_unit_set(&mut r, m, d)
        };
        let k = r.random_range(1..=3);
        let kp = r.random_range(0..=n);
        let cover = kfold_nn_cover(&v, &p, k, kp).unwrap();
        let reference = reference_mob(&v, &p, &PruneConfig::manual(n, kp, k).unwrap()).unwrap();
        assert_eq!(cover.centers, reference.prompt_centers);
    }
}

#[test]
fn heuristic_table_entries() {
    assert_eq!(
        budget_heuristic(64, CouplingClass::Weak, Tier::High).unwrap(),
        (32, 4)
    );
    assert_eq!(
        budget_heuristic(192, CouplingClass::Weak, Tier::Low).unwrap(),
        (80, 10)
    );
    assert_eq!(
        budget_heuristic(64, CouplingClass::Strong, Tier::High).unwrap(),
        (24, 2)
    );
}

/// Tries every split of the sorted sample and recomputes both sums of squares
/// from scratch.
fn exhaustive_split_tau(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sse = |g: &[f64]| {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        g.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let mut best = (f64::INFINITY, 0.0);
    for cut in 1..s.len() {
        let cost = sse(&s[..cut]) + sse(&s[cut..]);
        if cost < best.0 {
            best = (cost, 0.5 * (mean(&s[..cut]) + mean(&s[cut..])));
        }
    }
    best.1
}

#[test]
fn calibration_matches_exhaustive_split() {
    let mut r = rng(17);
    for trial in 0..20 {
        let (lo_mode, hi_mode) = (0.2 + 0.01 * trial as f64, 1.1);
        let mut etas: Vec<f64> = (0..50).map(|_| lo_mode + 0.1 * r.random::<f64>()).collect();
        etas.extend((0..50).map(|_| hi_mode + 0.1 * r.random::<f64>()));
        let tau = calibrate_tau(&etas).unwrap().tau;
        let want = exhaustive_split_tau(&etas);
        assert!(
            (tau - want).abs() <= 1e-12 * want.abs().max(1.0),
            "{tau} vs {want}"
        );
        let lo_max = etas[..50].iter().copied().fold(f64::MIN, f64::max);
        let hi_min = etas[50..].iter().copied().fold(f64::MAX, f64::min);
        assert!(lo_max < tau && tau < hi_min);
    }
}
