//! The balanced-covering selector.
//!
//! Selection runs in two greedy passes over the normalized visual set:
//!
//! 1. **Prompt centers.** Each prompt token nominates its `k` most similar
//!    visual tokens. Nominations are deduplicated, keeping the largest
//!    similarity seen for an index, and the `K_p` best-aligned survivors
//!    become prompt centers.
//! 2. **Visual centers.** Farthest point sampling, seeded with the prompt
//!    centers, fills the remaining `K − K_p` slots using the cosine gap
//!    `1 − cos` as its distance.
//!
//! All ties (top-k, argmax, argmin) go to the lowest index.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, dot, EmbeddingSet, IndexList};
use crate::error::{MobError, Result};
use crate::hausdorff::{self, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingClass {
    Strong,
    Weak,
}

/// Reduction tier: `High` is the most aggressive pruning (smallest `K`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    High,
    Mid,
    Low,
}

/// Where the `(K_p, k)` pair of a [`PruneConfig`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    Manual,
    EtaPrior { class: CouplingClass, tier: Tier },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub budget_k: usize,
    pub budget_kp: usize,
    pub fold_k: usize,
    pub heuristic: Heuristic,
}

impl PruneConfig {
    pub fn manual(budget_k: usize, budget_kp: usize, fold_k: usize) -> Result<Self> {
        let cfg = Self {
            budget_k,
            budget_kp,
            fold_k,
            heuristic: Heuristic::Manual,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_eta_prior(budget_k: usize, class: CouplingClass, tier: Tier) -> Result<Self> {
        let (budget_kp, fold_k) = budget_heuristic(budget_k, class, tier)?;
        Ok(Self {
            budget_k,
            budget_kp,
            fold_k,
            heuristic: Heuristic::EtaPrior { class, tier },
        })
    }

    pub fn budget_kv(&self) -> usize {
        self.budget_k - self.budget_kp
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget_k == 0 {
            return Err(MobError::InvalidConfig(
                "budget K must be at least 1".into(),
            ));
        }
        if self.budget_kp > self.budget_k {
            return Err(MobError::InvalidConfig(format!(
                "K_p={} exceeds K={}",
                self.budget_kp, self.budget_k
            )));
        }
        if self.fold_k == 0 {
            return Err(MobError::InvalidConfig(
                "covering fold k must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one [`mob_prune`] call. Radii are in normalized Euclidean units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub prompt_centers: IndexList,
    pub visual_centers: IndexList,
    /// `h(P → S_p)`; measured against the whole retained set when `S_p` is empty.
    pub eps_p_directed: f64,
    /// `d_H(S_p, P)`, same fallback as above.
    pub eps_p_symmetric: f64,
    /// `h(V → S)` for the retained set `S = S_p ∪ S_v`.
    pub eps_v: f64,
    pub eta: f64,
    /// Prompt budget that found no candidate and was handed to the visual pass.
    pub shortfall_reassigned: usize,
    pub config: PruneConfig,
}

impl SelectionResult {
    /// Retained indices, prompt centers first, each group in selection order.
    pub fn retained(&self) -> Vec<usize> {
        self.prompt_centers
            .iter()
            .chain(self.visual_centers.iter())
            .copied()
            .collect()
    }
}

/// A visual index nominated by at least one prompt token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub similarity: f64,
}

/// Higher similarity first, then lower index.
fn by_similarity(a: &Candidate, b: &Candidate) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then(a.index.cmp(&b.index))
}

fn check_prompt_inputs(v: &EmbeddingSet, p: &EmbeddingSet) -> Result<()> {
    v.check_same_dim(p)?;
    if !v.is_normalized() || !p.is_normalized() {
        return Err(MobError::NotNormalized);
    }
    Ok(())
}

/// Every candidate of the k-fold nearest-neighbour pass, ranked by alignment.
pub fn ranked_candidates(v: &EmbeddingSet, p: &EmbeddingSet, k: usize) -> Result<Vec<Candidate>> {
    check_prompt_inputs(v, p)?;
    if k == 0 {
        return Err(MobError::InvalidConfig(
            "covering fold k must be at least 1".into(),
        ));
    }
    let n = v.n();
    let k = k.min(n);
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut row: Vec<Candidate> = Vec::with_capacity(n);
    for prompt in p.rows() {
        row.clear();
        row.extend(v.rows().enumerate().map(|(index, x)| Candidate {
            index,
            similarity: cosine(prompt, x),
        }));
        if k < n {
            row.select_nth_unstable_by(k - 1, by_similarity);
        }
        for c in &row[..k] {
            if c.similarity > best[c.index] {
                best[c.index] = c.similarity;
            }
        }
    }
    let mut candidates: Vec<Candidate> = best
        .into_iter()
        .enumerate()
        .filter(|(_, s)| *s > f64::NEG_INFINITY)
        .map(|(index, similarity)| Candidate { index, similarity })
        .collect();
    candidates.sort_by(by_similarity);
    Ok(candidates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnCover {
    /// Prompt centers in alignment order.
    pub centers: IndexList,
    /// Distinct candidates before truncation to the prompt budget.
    pub candidate_count: usize,
}

impl NnCover {
    pub fn shortfall(&self, budget_kp: usize) -> usize {
        budget_kp.saturating_sub(self.centers.len())
    }
}

/// k-fold nearest-neighbour covering of the prompt set by visual tokens.
pub fn kfold_nn_cover(
    v: &EmbeddingSet,
    p: &EmbeddingSet,
    k: usize,
    budget_kp: usize,
) -> Result<NnCover> {
    let candidates = ranked_candidates(v, p, k)?;
    let candidate_count = candidates.len();
    let centers = candidates
        .into_iter()
        .take(budget_kp)
        .map(|c| c.index)
        .collect();
    Ok(NnCover {
        centers: IndexList::from_vec_unchecked(centers),
        candidate_count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpsOutcome {
    /// Newly selected indices in selection order (the seed is not repeated).
    pub selected: IndexList,
    /// `h(V → seed ∪ selected)` under the normalized metric.
    pub eps_v: f64,
    /// Cosine gap `min_s (1 − cos)` of each pick at the moment it was chosen.
    /// The first entry is infinite when the seed was empty.
    pub step_gaps: Vec<f64>,
    /// Largest remaining cosine gap after the last pick.
    pub residual_gap: f64,
}

/// Seeded farthest point sampling over the rows of a normalized set.
///
/// With an empty seed the first center is the row least aligned with the
/// mean direction of `v`.
pub fn fps_select(v: &EmbeddingSet, seed: &IndexList, budget_kv: usize) -> Result<FpsOutcome> {
    if !v.is_normalized() {
        return Err(MobError::NotNormalized);
    }
    let n = v.n();
    let seed = IndexList::new(seed.as_slice().to_vec(), n)?;
    let available = n - seed.len();
    if budget_kv > available {
        return Err(MobError::BudgetExceedsPopulation {
            budget: budget_kv,
            available,
        });
    }
    if seed.is_empty() && budget_kv == 0 {
        return Err(MobError::EmptySet);
    }

    let mut taken = vec![false; n];
    let mut gap = vec![f64::INFINITY; n];
    for &s in seed.iter() {
        taken[s] = true;
        gap[s] = 0.0;
    }
    if !seed.is_empty() {
        for (i, x) in v.rows().enumerate() {
            if taken[i] {
                continue;
            }
            for &s in seed.iter() {
                let g = 1.0 - cosine(x, v.row(s));
                if g < gap[i] {
                    gap[i] = g;
                }
            }
        }
    }

    let mut selected = Vec::with_capacity(budget_kv);
    let mut step_gaps = Vec::with_capacity(budget_kv);
    for _ in 0..budget_kv {
        let pick = if selected.is_empty() && seed.is_empty() {
            least_aligned_with_mean(v)
        } else {
            farthest_untaken(&gap, &taken)
        };
        step_gaps.push(gap[pick]);
        selected.push(pick);
        taken[pick] = true;
        gap[pick] = 0.0;
        let center = v.row(pick);
        for (i, x) in v.rows().enumerate() {
            if taken[i] {
                continue;
            }
            let g = 1.0 - cosine(x, center);
            if g < gap[i] {
                gap[i] = g;
            }
        }
    }

    let residual_gap = gap.iter().copied().fold(0.0, f64::max);
    let all: Vec<usize> = seed.iter().chain(selected.iter()).copied().collect();
    let eps_v = hausdorff::directed_prepared(v, &v.select(&all)?);
    Ok(FpsOutcome {
        selected: IndexList::from_vec_unchecked(selected),
        eps_v,
        step_gaps,
        residual_gap,
    })
}

fn farthest_untaken(gap: &[f64], taken: &[bool]) -> usize {
    let mut best: Option<usize> = None;
    for (i, &g) in gap.iter().enumerate() {
        if taken[i] {
            continue;
        }
        match best {
            Some(b) if gap[b] >= g => {}
            _ => best = Some(i),
        }
    }
    best.expect("at least one untaken row")
}

fn least_aligned_with_mean(v: &EmbeddingSet) -> usize {
    let mut mean = vec![0.0; v.d()];
    for row in v.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    let mut best = (f64::INFINITY, 0);
    for (i, row) in v.rows().enumerate() {
        let a = dot(row, &mean);
        if a < best.0 {
            best = (a, i);
        }
    }
    best.1
}

/// Runs the full selector: prompt covering, then visual covering with the
/// remaining budget, then radii and η under the normalized metric.
pub fn mob_prune(v: &EmbeddingSet, p: &EmbeddingSet, cfg: &PruneConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    v.check_same_dim(p)?;
    let v = v.to_normalized()?;
    let p = p.to_normalized()?;

    let total = cfg.budget_k.min(v.n());
    let kp = cfg.budget_kp.min(total);
    let cover = kfold_nn_cover(&v, &p, cfg.fold_k, kp)?;
    let shortfall = cover.shortfall(kp);
    let prompt_centers = cover.centers;
    let fps = fps_select(&v, &prompt_centers, total - prompt_centers.len())?;
    let visual_centers = fps.selected;

    let alignment_set = if prompt_centers.is_empty() {
        v.select(visual_centers.as_slice())?
    } else {
        v.select(prompt_centers.as_slice())?
    };
    let eps_p_directed = hausdorff::directed_prepared(&p, &alignment_set);
    let eps_p_symmetric = eps_p_directed.max(hausdorff::directed_prepared(&alignment_set, &p));
    let eta = hausdorff::coupling(&v, &p, Metric::NormalizedEuclidean, None)?.eta;

    Ok(SelectionResult {
        prompt_centers,
        visual_centers,
        eps_p_directed,
        eps_p_symmetric,
        eps_v: fps.eps_v,
        eta,
        shortfall_reassigned: shortfall,
        config: *cfg,
    })
}

/// `round_half_up(num / den)` for non-negative integers.
fn round_half_up(num: usize, den: usize) -> usize {
    (2 * num + den) / (2 * den)
}

/// Prompt budget and covering fold from a coupling prior.
///
/// | class  | High    | Mid      | Low      | fold            |
/// |--------|---------|----------|----------|-----------------|
/// | Strong | 3K/8    | K/4      | K/4      | 3·K_p/40        |
/// | Weak   | K/2     | 7K/16    | 5K/12    | K_p/8           |
///
/// `K_p` is floored, the fold is rounded half up and clamped to at least 1.
pub fn budget_heuristic(
    budget_k: usize,
    class: CouplingClass,
    tier: Tier,
) -> Result<(usize, usize)> {
    if budget_k < 8 {
        return Err(MobError::BudgetTooSmall(budget_k));
    }
    let (num, den) = match (class, tier) {
        (CouplingClass::Strong, Tier::High) => (3, 8),
        (CouplingClass::Strong, Tier::Mid) => (1, 4),
        (CouplingClass::Strong, Tier::Low) => (1, 4),
        (CouplingClass::Weak, Tier::High) => (1, 2),
        (CouplingClass::Weak, Tier::Mid) => (7, 16),
        (CouplingClass::Weak, Tier::Low) => (5, 12),
    };
    let kp = (budget_k * num / den).min(budget_k);
    if kp < 1 {
        return Err(MobError::BudgetTooSmall(budget_k));
    }
    let fold = match class {
        CouplingClass::Strong => round_half_up(3 * kp, 40),
        CouplingClass::Weak => round_half_up(kp, 8),
    };
    Ok((kp, fold.max(1)))
}

/// One row of a user-supplied `K → (K_p, k)` table, used when no coupling
/// prior is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub budget_k: usize,
    pub budget_kp: usize,
    pub fold_k: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BudgetTable {
    pub entries: Vec<BudgetEntry>,
}

impl BudgetTable {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn lookup(&self, budget_k: usize) -> Option<PruneConfig> {
        self.entries
            .iter()
            .find(|e| e.budget_k == budget_k)
            .map(|e| PruneConfig {
                budget_k: e.budget_k,
                budget_kp: e.budget_kp,
                fold_k: e.fold_k,
                heuristic: Heuristic::Manual,
            })
    }
}
