//! Brute-force references and covering-number estimators.
//!
//! Everything here is deliberately naive. The exhaustive searches refuse
//! instances above a hard size cap instead of running for hours, and the
//! algorithm transcriptions avoid sharing code paths with the optimized
//! selector beyond the embedding container itself.
//!
//! Covering centers are always drawn from the point set being covered. All
//! distances are plain Euclidean on the rows as given; normalize first to
//! work in the cosine-induced metric.

// the transcriptions index the way the pseudocode does
#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use crate::bounds::BoundParams;
use crate::covering::{PruneConfig, SelectionResult};
use crate::embedding::{EmbeddingSet, IndexList};
use crate::error::{MobError, Result};
use crate::hausdorff::{Coupling, CouplingReport, Metric};

pub const EXACT_COVER_LIMIT: usize = 16;
pub const KCENTER_LIMIT: usize = 12;
pub const REFERENCE_LIMIT: usize = 256;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

fn distance_matrix(x: &EmbeddingSet) -> Vec<Vec<f64>> {
    (0..x.n())
        .map(|i| (0..x.n()).map(|j| dist(x.row(i), x.row(j))).collect())
        .collect()
}

/// Largest pairwise distance.
pub fn diameter(x: &EmbeddingSet) -> f64 {
    let mut best = 0.0f64;
    for i in 0..x.n() {
        for j in i + 1..x.n() {
            best = best.max(dist(x.row(i), x.row(j)));
        }
    }
    best
}

/// Greedy ε-net size: the lowest-index uncovered point becomes a center and
/// covers its closed ε-ball, until nothing is left uncovered.
pub fn greedy_cover_count(x: &EmbeddingSet, eps: f64) -> usize {
    let n = x.n();
    let eps2 = eps * eps;
    let mut covered = vec![false; n];
    let mut centers = 0;
    for c in 0..n {
        if covered[c] {
            continue;
        }
        centers += 1;
        let center = x.row(c);
        for (i, flag) in covered.iter_mut().enumerate() {
            if !*flag && crate::embedding::squared_euclidean(center, x.row(i)) <= eps2 {
                *flag = true;
            }
        }
    }
    centers
}

/// Minimum number of member centers whose closed ε-balls cover `x`.
pub fn exact_cover_count(x: &EmbeddingSet, eps: f64) -> Result<usize> {
    let n = x.n();
    if n > EXACT_COVER_LIMIT {
        return Err(MobError::TooLarge {
            n,
            limit: EXACT_COVER_LIMIT,
        });
    }
    let dm = distance_matrix(x);
    let ball: Vec<u32> = (0..n)
        .map(|c| {
            (0..n)
                .filter(|&i| dm[c][i] <= eps)
                .fold(0u32, |m, i| m | (1 << i))
        })
        .collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for size in 1..=n {
        let mut found = false;
        for_each_combination(n, size, &mut |combo| {
            let m = combo.iter().fold(0u32, |m, &c| m | ball[c]);
            if m == full {
                found = true;
            }
            !found
        });
        if found {
            return Ok(size);
        }
    }
    unreachable!("every point covers itself")
}

/// Calls `f` on each `size`-subset of `0..n` in lexicographic order until it returns false.
fn for_each_combination(n: usize, size: usize, f: &mut dyn FnMut(&[usize]) -> bool) {
    if size == 0 || size > n {
        return;
    }
    let mut combo: Vec<usize> = (0..size).collect();
    'outer: loop {
        if !f(&combo) {
            return;
        }
        let mut i = size;
        while i > 0 {
            i -= 1;
            if combo[i] < n - size + i {
                combo[i] += 1;
                for j in i + 1..size {
                    combo[j] = combo[j - 1] + 1;
                }
                continue 'outer;
            }
        }
        return;
    }
}

/// Smallest achievable `h(x → C)` over all `K`-subsets `C ⊆ x`.
pub fn optimal_kcenter_radius(x: &EmbeddingSet, k: usize) -> Result<f64> {
    let n = x.n();
    if n > KCENTER_LIMIT {
        return Err(MobError::TooLarge {
            n,
            limit: KCENTER_LIMIT,
        });
    }
    if k == 0 || k > n {
        return Err(MobError::InvalidConfig(format!(
            "need 1 <= K <= n, got K={k}, n={n}"
        )));
    }
    let dm = distance_matrix(x);
    let mut best = f64::INFINITY;
    for_each_combination(n, k, &mut |combo| {
        let radius = (0..n)
            .map(|i| {
                combo
                    .iter()
                    .map(|&c| dm[i][c])
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        if radius < best {
            best = radius;
        }
        true
    });
    Ok(best)
}

/// Power-law fit `N(x, ε) ≈ C ε^{−d_eff}` over a radius window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityFit {
    pub d_eff_hat: f64,
    /// Intercept `ln C` of the log-log regression.
    pub log_const: f64,
    pub r2: f64,
    pub radius_window: (f64, f64),
    /// `min_i N_i ε_i^{d_eff}` over the sampled radii.
    pub lower_const: f64,
    /// `max_i N_i ε_i^{d_eff}` over the sampled radii.
    pub upper_const: f64,
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
}

/// `[0.05·diam, 0.5·diam]`
pub fn default_window(x: &EmbeddingSet) -> (f64, f64) {
    let diam = diameter(x);
    (0.05 * diam, 0.5 * diam)
}

/// Estimates the effective dimension of `x` from greedy covering counts on a
/// log-spaced radius grid.
pub fn fit_effective_dimension(
    x: &EmbeddingSet,
    window: (f64, f64),
    n_radii: usize,
) -> Result<RegularityFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(MobError::InvalidConfig(format!(
            "radius window must satisfy 0 < eps_min < eps_max, got ({lo}, {hi})"
        )));
    }
    if n_radii < 4 {
        return Err(MobError::InvalidConfig(format!(
            "need at least 4 radii, got {n_radii}"
        )));
    }
    let ratio = hi / lo;
    let radii: Vec<f64> = (0..n_radii)
        .map(|i| lo * ratio.powf(i as f64 / (n_radii - 1) as f64))
        .collect();
    let counts: Vec<usize> = radii.iter().map(|&e| greedy_cover_count(x, e)).collect();
    let mut distinct = counts.clone();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(MobError::DegenerateFit(format!(
            "covering count is constant ({}) across the window",
            counts[0]
        )));
    }

    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, r2) = least_squares(&xs, &ys);
    let d_eff_hat = -slope;
    let scaled: Vec<f64> = radii
        .iter()
        .zip(&counts)
        .map(|(r, &c)| c as f64 * r.powf(d_eff_hat))
        .collect();
    Ok(RegularityFit {
        d_eff_hat,
        log_const: intercept,
        r2,
        radius_window: window,
        lower_const: scaled.iter().copied().fold(f64::INFINITY, f64::min),
        upper_const: scaled.iter().copied().fold(0.0, f64::max),
        radii,
        counts,
    })
}

/// Ordinary least squares `y = slope·x + intercept`, returning `r²` as well.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Smallest `z > 1` on a geometric grid such that
/// `K < N(P, η/z) + N(V, η/z)`, using greedy counts. `None` if even the
/// finest radius tried cannot make the right side exceed `K`.
pub fn choose_z(v: &EmbeddingSet, p: &EmbeddingSet, eta: f64, budget_k: usize) -> Option<f64> {
    if eta <= 0.0 {
        return None;
    }
    let mut z = 1.01f64;
    while z < 1e4 {
        let r = eta / z;
        if budget_k < greedy_cover_count(p, r) + greedy_cover_count(v, r) {
            return Some(z);
        }
        z *= 1.01;
    }
    None
}

/// Bound constants fitted from one `(V, P)` instance: `a, b` from the prompt
/// set, `a′, b′` from the visual set, and `d_eff` from the visual fit.
/// `z` is left at its default; see [`choose_z`].
pub fn fit_bound_params(
    v: &EmbeddingSet,
    p: &EmbeddingSet,
    eta: f64,
    n_radii: usize,
) -> Result<(BoundParams, RegularityFit, RegularityFit)> {
    let fit_v = fit_effective_dimension(v, default_window(v), n_radii)?;
    let d_eff = fit_v.d_eff_hat;
    let fit_p = fit_effective_dimension(p, default_window(p), n_radii)?;
    let envelope = |fit: &RegularityFit| {
        let scaled: Vec<f64> = fit
            .radii
            .iter()
            .zip(&fit.counts)
            .map(|(r, &c)| c as f64 * r.powf(d_eff))
            .collect();
        let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().copied().fold(0.0, f64::max);
        (lo, if hi > lo { hi } else { lo * (1.0 + 1e-9) })
    };
    let (a, b) = envelope(&fit_p);
    let (a_prime, b_prime) = envelope(&fit_v);
    let params = BoundParams {
        eta,
        d_eff,
        a,
        b,
        a_prime,
        b_prime,
        ..Default::default()
    };
    Ok((params, fit_v, fit_p))
}

fn ensure_small(n: usize) -> Result<()> {
    if n > REFERENCE_LIMIT {
        return Err(MobError::TooLarge {
            n,
            limit: REFERENCE_LIMIT,
        });
    }
    Ok(())
}

fn row_normalize(x: &EmbeddingSet) -> Result<EmbeddingSet> {
    let mut out = Vec::with_capacity(x.n() * x.d());
    for i in 0..x.n() {
        let row = x.row(i);
        let mut s = 0.0;
        for t in 0..row.len() {
            s += row[t] * row[t];
        }
        let norm = s.sqrt();
        if norm <= crate::embedding::ZERO_NORM {
            return Err(MobError::ZeroVector { row: i, norm });
        }
        for t in 0..row.len() {
            out.push(row[t] / norm);
        }
    }
    EmbeddingSet::new_normalized(out, x.n(), x.d())
}

fn maybe_normalize(x: &EmbeddingSet) -> Result<EmbeddingSet> {
    if x.is_normalized() {
        Ok(x.clone())
    } else {
        row_normalize(x)
    }
}

/// Literal transcription of the coupling computation: full `cdist`, then
/// row minima, column minima and the larger of the two maxima.
pub fn reference_coupling(
    v: &EmbeddingSet,
    p: &EmbeddingSet,
    metric: Metric,
) -> Result<CouplingReport> {
    ensure_small(v.n().max(p.n()))?;
    if v.d() != p.d() {
        return Err(MobError::DimensionMismatch {
            left: v.d(),
            right: p.d(),
        });
    }
    let (v, p) = match metric {
        Metric::RawEuclidean => (v.clone(), p.clone()),
        Metric::NormalizedEuclidean => (maybe_normalize(v)?, maybe_normalize(p)?),
    };
    let dm: Vec<Vec<f64>> = (0..v.n())
        .map(|i| (0..p.n()).map(|j| dist(v.row(i), p.row(j))).collect())
        .collect();
    let mut h_v_to_p = 0.0f64;
    for row in &dm {
        h_v_to_p = h_v_to_p.max(row.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let mut h_p_to_v = 0.0f64;
    for j in 0..p.n() {
        h_p_to_v = h_p_to_v.max((0..v.n()).map(|i| dm[i][j]).fold(f64::INFINITY, f64::min));
    }
    Ok(CouplingReport {
        h_v_to_p,
        h_p_to_v,
        eta: h_v_to_p.max(h_p_to_v),
        classification: Coupling::Unclassified,
    })
}

fn directed(a: &EmbeddingSet, a_idx: &[usize], b: &EmbeddingSet, b_idx: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for &i in a_idx {
        let mut best = f64::INFINITY;
        for &j in b_idx {
            best = best.min(dist(a.row(i), b.row(j)));
        }
        worst = worst.max(best);
    }
    worst
}

/// Line-by-line transcription of the balanced-covering selector on small inputs.
pub fn reference_mob(
    v: &EmbeddingSet,
    p: &EmbeddingSet,
    cfg: &PruneConfig,
) -> Result<SelectionResult> {
    cfg.validate()?;
    ensure_small(v.n().max(p.n()))?;
    if v.d() != p.d() {
        return Err(MobError::DimensionMismatch {
            left: v.d(),
            right: p.d(),
        });
    }
    // normalize
    let v = maybe_normalize(v)?;
    let p = maybe_normalize(p)?;
    let n = v.n();
    let l = p.n();
    let d = v.d();
    let total = cfg.budget_k.min(n);
    let kp = cfg.budget_kp.min(total);

    // M = P Vᵀ
    let mut m = vec![vec![0.0; n]; l];
    for i in 0..l {
        for j in 0..n {
            let mut s = 0.0;
            for t in 0..d {
                s += p.row(i)[t] * v.row(j)[t];
            }
            m[i][j] = s.clamp(-1.0, 1.0);
        }
    }

    // k nearest per prompt, flattened
    let k = cfg.fold_k.min(n);
    let mut c_idx = Vec::with_capacity(l * k);
    let mut c_sim = Vec::with_capacity(l * k);
    for row in &m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &j in &order[..k] {
            c_idx.push(j);
            c_sim.push(row[j]);
        }
    }

    // unique indices, keeping the largest associated similarity
    let mut uniq_idx: Vec<usize> = Vec::new();
    let mut uniq_sim: Vec<f64> = Vec::new();
    for (&j, &s) in c_idx.iter().zip(&c_sim) {
        match uniq_idx.iter().position(|&u| u == j) {
            Some(pos) => {
                if s > uniq_sim[pos] {
                    uniq_sim[pos] = s;
                }
            }
            None => {
                uniq_idx.push(j);
                uniq_sim.push(s);
            }
        }
    }

    // top-K_p by similarity
    let mut order: Vec<usize> = (0..uniq_idx.len()).collect();
    order.sort_by(|&a, &b| {
        uniq_sim[b]
            .total_cmp(&uniq_sim[a])
            .then(uniq_idx[a].cmp(&uniq_idx[b]))
    });
    let s_p: Vec<usize> = order.iter().take(kp).map(|&o| uniq_idx[o]).collect();
    let shortfall = kp - s_p.len();

    // farthest point sampling seeded with the prompt centers
    let k_v = total - s_p.len();
    let mut s: Vec<usize> = s_p.clone();
    let mut selected = vec![false; n];
    let mut dvec = vec![f64::INFINITY; n];
    for &c in &s_p {
        selected[c] = true;
    }
    for i in 0..n {
        for &c in &s_p {
            dvec[i] = dvec[i].min(1.0 - m_cos(&v, i, c));
        }
        if selected[i] {
            dvec[i] = 0.0;
        }
    }
    let mut s_v = Vec::with_capacity(k_v);
    for t in 0..k_v {
        let i_star = if t == 0 && s_p.is_empty() {
            let mut mean = vec![0.0; d];
            for i in 0..n {
                for q in 0..d {
                    mean[q] += v.row(i)[q];
                }
            }
            let mut best = 0;
            let mut best_val = f64::INFINITY;
            for i in 0..n {
                let mut a = 0.0;
                for q in 0..d {
                    a += v.row(i)[q] * mean[q];
                }
                if a < best_val {
                    best_val = a;
                    best = i;
                }
            }
            best
        } else {
            let mut best = usize::MAX;
            for i in 0..n {
                if !selected[i] && (best == usize::MAX || dvec[i] > dvec[best]) {
                    best = i;
                }
            }
            best
        };
        s.push(i_star);
        s_v.push(i_star);
        selected[i_star] = true;
        for i in 0..n {
            dvec[i] = dvec[i].min(1.0 - m_cos(&v, i, i_star));
        }
        dvec[i_star] = 0.0;
    }

    let all_p: Vec<usize> = (0..l).collect();
    let all_v: Vec<usize> = (0..n).collect();
    let align: &[usize] = if s_p.is_empty() { &s_v } else { &s_p };
    let eps_p_directed = directed(&p, &all_p, &v, align);
    let eps_p_symmetric = eps_p_directed.max(directed(&v, align, &p, &all_p));
    let eps_v = directed(&v, &all_v, &v, &s);
    let eta = reference_coupling(&v, &p, Metric::RawEuclidean)?.eta;

    Ok(SelectionResult {
        prompt_centers: IndexList::new(s_p, n)?,
        visual_centers: IndexList::new(s_v, n)?,
        eps_p_directed,
        eps_p_symmetric,
        eps_v,
        eta,
        shortfall_reassigned: shortfall,
        config: *cfg,
    })
}

fn m_cos(v: &EmbeddingSet, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for t in 0..v.d() {
        s += v.row(i)[t] * v.row(j)[t];
    }
    s.clamp(-1.0, 1.0)
}
