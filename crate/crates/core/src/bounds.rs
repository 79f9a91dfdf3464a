//! Closed-form error bounds, the budget trade-off floor, and the FLOP model.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{MobError, Result};
use crate::hausdorff::{hausdorff, Metric};

/// Constants shared by the bound calculators.
///
/// `a ≤ N(P, ε)·ε^d_eff ≤ b` and `a′ ≤ N(V, ε)·ε^d_eff ≤ b′` over the
/// regularity window; `z > 1` scales the coupling radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub lipschitz_c: f64,
    pub eta: f64,
    pub d_eff: f64,
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
    pub z: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            lipschitz_c: 1.0,
            eta: 0.0,
            d_eff: 1.0,
            a: 1.0,
            b: 1.0,
            a_prime: 1.0,
            b_prime: 1.0,
            z: 2.0,
        }
    }
}

impl BoundParams {
    /// Checks the strict orderings the covering lemma states. Calculators do
    /// not call this; `b = a` is allowed there as a limiting case.
    pub fn validate(&self) -> Result<()> {
        let ok = self.lipschitz_c >= 1.0
            && self.eta >= 0.0
            && self.d_eff > 0.0
            && self.a > 0.0
            && self.b > self.a
            && self.a_prime > 0.0
            && self.b_prime > self.a_prime
            && self.z > 1.0
            && [
                self.lipschitz_c,
                self.eta,
                self.d_eff,
                self.b,
                self.b_prime,
                self.z,
            ]
            .iter()
            .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(MobError::InvalidConfig(format!(
                "invalid bound parameters: {self:?}"
            )))
        }
    }

    /// `(4 a a′)^{1/d_eff}`
    pub fn d1(&self) -> f64 {
        (4.0 * self.a * self.a_prime).powf(1.0 / self.d_eff)
    }

    /// `1 / z²`
    pub fn d2(&self) -> f64 {
        1.0 / (self.z * self.z)
    }
}

/// `C · max{ min{d_H(S,V), d_H(V,P)}, min{d_H(S,V), d_H(S,P)} }`
pub fn lemma1_bound(
    s: &EmbeddingSet,
    v: &EmbeddingSet,
    p: &EmbeddingSet,
    lipschitz_c: f64,
    metric: Metric,
) -> Result<f64> {
    let sv = hausdorff(s, v, metric)?;
    let vp = hausdorff(v, p, metric)?;
    let sp = hausdorff(s, p, metric)?;
    Ok(lipschitz_c * sv.min(vp).max(sv.min(sp)))
}

/// `C · max{d_H(S_p, P), d_H(S_v, V)} + C · η`
pub fn relaxed_bound(
    sp: &EmbeddingSet,
    sv: &EmbeddingSet,
    p: &EmbeddingSet,
    v: &EmbeddingSet,
    lipschitz_c: f64,
    eta: f64,
    metric: Metric,
) -> Result<f64> {
    let align = hausdorff(sp, p, metric)?;
    let preserve = hausdorff(sv, v, metric)?;
    Ok(lipschitz_c * align.max(preserve) + lipschitz_c * eta)
}

/// Lower bound on `ε_p · ε_v` at budget `K`, with the per-objective level ε*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffFloor {
    pub product_floor: f64,
    pub eps_star: f64,
    pub budget_term: f64,
    pub coupling_term: f64,
}

pub fn theorem1_floor(budget_k: usize, params: &BoundParams) -> TradeoffFloor {
    let k = budget_k as f64;
    let d1 = params.d1();
    let budget_term = d1 * k.powf(-2.0 / params.d_eff);
    let coupling_term = params.d2() * params.eta * params.eta;
    let eps_star = (params.eta / params.z).max(d1.sqrt() * k.powf(-1.0 / params.d_eff));
    TradeoffFloor {
        product_floor: budget_term.max(coupling_term),
        eps_star,
        budget_term,
        coupling_term,
    }
}

/// `α(η, k, L) = η (b k L / a)^{1/d_eff}`
pub fn alpha(params: &BoundParams, fold_k: usize, prompt_len: usize) -> f64 {
    params.eta * (params.b * fold_k as f64 * prompt_len as f64 / params.a).powf(1.0 / params.d_eff)
}

/// `β = 2 (b′)^{1/d_eff}`
pub fn beta(params: &BoundParams) -> f64 {
    2.0 * params.b_prime.powf(1.0 / params.d_eff)
}

/// Upper bound on the pruning error of the balanced selector.
pub fn theorem2_bound(
    params: &BoundParams,
    fold_k: usize,
    prompt_len: usize,
    budget_kp: usize,
    budget_kv: usize,
) -> Result<f64> {
    if budget_kp == 0 || budget_kv == 0 {
        return Err(MobError::InvalidConfig(
            "the guarantee needs K_p >= 1 and K_v >= 1".into(),
        ));
    }
    let inv = -1.0 / params.d_eff;
    let align = alpha(params, fold_k, prompt_len) * (budget_kp as f64).powf(inv);
    let preserve = beta(params) * (budget_kv as f64).powf(inv);
    let c = params.lipschitz_c;
    Ok(c * align.max(preserve) + c * params.eta)
}

/// Multiply-accumulate counts of the online computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    /// Exact coupling: one `N × L` distance matrix over `d` features.
    pub flops_hausdorff: u64,
    /// Selector: `N (L + K) d`.
    pub flops_mob: u64,
}

impl CostReport {
    pub fn tflops_hausdorff(&self) -> f64 {
        self.flops_hausdorff as f64 * 1e-12
    }

    pub fn tflops_mob(&self) -> f64 {
        self.flops_mob as f64 * 1e-12
    }
}

pub fn cost_model(n: u64, l: u64, k: u64, d: u64) -> Result<CostReport> {
    if n == 0 || l == 0 || k == 0 || d == 0 {
        return Err(MobError::InvalidConfig(
            "cost model inputs must be positive".into(),
        ));
    }
    Ok(CostReport {
        flops_hausdorff: n * l * d,
        flops_mob: n * (l + k) * d,
    })
}
