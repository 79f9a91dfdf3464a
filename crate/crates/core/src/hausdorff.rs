//! Exact Hausdorff distances, prompt-visual coupling and threshold calibration.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::embedding::{squared_euclidean, EmbeddingSet};
use crate::error::{MobError, Result};

/// Which Euclidean distance the Hausdorff computations use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Distances between the embeddings as given.
    RawEuclidean,
    /// Distances between L2-normalized rows, `√(2 − 2 cos)`.
    #[default]
    NormalizedEuclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Strong,
    Weak,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSource {
    UserSupplied,
    Calibrated,
}

/// Threshold separating strong from weak coupling, in distance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub tau: f64,
    pub source: TauSource,
}

impl CalibrationConfig {
    pub fn user(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(MobError::InvalidConfig(format!(
                "tau must be a positive finite number, got {tau}"
            )));
        }
        Ok(Self {
            tau,
            source: TauSource::UserSupplied,
        })
    }

    /// Ties at `eta == tau` count as strong coupling.
    pub fn classify(&self, eta: f64) -> Coupling {
        if eta <= self.tau {
            Coupling::Strong
        } else {
            Coupling::Weak
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub h_v_to_p: f64,
    pub h_p_to_v: f64,
    pub eta: f64,
    pub classification: Coupling,
}

fn prepare(set: &EmbeddingSet, metric: Metric) -> Result<Cow<'_, EmbeddingSet>> {
    match metric {
        Metric::RawEuclidean => Ok(Cow::Borrowed(set)),
        Metric::NormalizedEuclidean => set.to_normalized(),
    }
}

/// Row-wise and column-wise nearest squared distances between two sets.
fn nearest_both_ways(a: &EmbeddingSet, b: &EmbeddingSet) -> (Vec<f64>, Vec<f64>) {
    let mut row_min = vec![f64::INFINITY; a.n()];
    let mut col_min = vec![f64::INFINITY; b.n()];
    for (i, ra) in a.rows().enumerate() {
        for (j, rb) in b.rows().enumerate() {
            let d2 = squared_euclidean(ra, rb);
            if d2 < row_min[i] {
                row_min[i] = d2;
            }
            if d2 < col_min[j] {
                col_min[j] = d2;
            }
        }
    }
    (row_min, col_min)
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// `sup_{x ∈ a} min_{y ∈ b} ‖x − y‖`.
pub fn directed_hausdorff(a: &EmbeddingSet, b: &EmbeddingSet, metric: Metric) -> Result<f64> {
    a.check_same_dim(b)?;
    let a = prepare(a, metric)?;
    let b = prepare(b, metric)?;
    Ok(directed_prepared(&a, &b))
}

pub(crate) fn directed_prepared(a: &EmbeddingSet, b: &EmbeddingSet) -> f64 {
    let mut worst = 0.0f64;
    for ra in a.rows() {
        let mut best = f64::INFINITY;
        for rb in b.rows() {
            let d2 = squared_euclidean(ra, rb);
            if d2 < best {
                best = d2;
            }
        }
        worst = worst.max(best);
    }
    worst.sqrt()
}

/// Symmetric Hausdorff distance `max(h(a→b), h(b→a))`.
pub fn hausdorff(a: &EmbeddingSet, b: &EmbeddingSet, metric: Metric) -> Result<f64> {
    Ok(coupling(a, b, metric, None)?.eta)
}

/// Measures the prompt-visual coupling η of one sample.
pub fn coupling(
    v: &EmbeddingSet,
    p: &EmbeddingSet,
    metric: Metric,
    calib: Option<&CalibrationConfig>,
) -> Result<CouplingReport> {
    v.check_same_dim(p)?;
    let v = prepare(v, metric)?;
    let p = prepare(p, metric)?;
    let (v_min, p_min) = nearest_both_ways(&v, &p);
    let h_v_to_p = max_of(&v_min).sqrt();
    let h_p_to_v = max_of(&p_min).sqrt();
    let eta = h_v_to_p.max(h_p_to_v);
    let classification = calib.map_or(Coupling::Unclassified, |c| c.classify(eta));
    Ok(CouplingReport {
        h_v_to_p,
        h_p_to_v,
        eta,
        classification,
    })
}

/// Picks τ from a sample of η values by splitting the sorted sample into the
/// two groups with the smallest total within-group sum of squares, and
/// returning the midpoint of the two group means.
pub fn calibrate_tau(etas: &[f64]) -> Result<CalibrationConfig> {
    if etas.len() < 4 {
        return Err(MobError::DegenerateSample(format!(
            "need at least 4 values, got {}",
            etas.len()
        )));
    }
    if let Some(bad) = etas.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(MobError::DegenerateSample(format!(
            "coupling values must be finite and non-negative, got {bad}"
        )));
    }
    let mut sorted = etas.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(MobError::DegenerateSample("zero variance".into()));
    }

    let split = best_split(&sorted);
    let (lo, hi) = sorted.split_at(split);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let tau = 0.5 * (mean(lo) + mean(hi));
    Ok(CalibrationConfig {
        tau,
        source: TauSource::Calibrated,
    })
}

/// Size of the lower group in the variance-minimizing two-group split of a
/// sorted sample. Ties go to the smallest split.
fn best_split(sorted: &[f64]) -> usize {
    let n = sorted.len();
    let mut prefix = vec![0.0; n + 1];
    let mut prefix_sq = vec![0.0; n + 1];
    for (i, x) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + x;
        prefix_sq[i + 1] = prefix_sq[i] + x * x;
    }
    let sse = |lo: usize, hi: usize| {
        let m = (hi - lo) as f64;
        let s = prefix[hi] - prefix[lo];
        (prefix_sq[hi] - prefix_sq[lo]) - s * s / m
    };
    let mut best = (f64::INFINITY, 1);
    for k in 1..n {
        let cost = sse(0, k) + sse(k, n);
        if cost < best.0 {
            best = (cost, k);
        }
    }
    best.1
}
