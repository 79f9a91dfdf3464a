//! Seeded generators of visual/prompt point clouds with a known manifold
//! dimension and a controlled coupling η.
//!
//! Visual rows are points `u` of a low-dimensional base manifold mapped onto
//! the unit sphere as `normalize(e₀ + s·Q u)`, where `e₀` and the columns of
//! `Q` come from a seeded random orthonormal frame of the ambient space.
//! Because every row is unit length, raw and normalized Euclidean distances
//! coincide.
//!
//! The prompt set holds `n_p − 1` slightly perturbed copies of well-spread
//! visual rows (chosen by farthest point sampling) plus one outlier. The
//! outlier is rotated away from its base row along a frame direction
//! orthogonal to the whole visual set, so its nearest visual row is exactly
//! `eta_target` away. The copies keep `h(V → P)` below the target, so the
//! outlier realizes the symmetric Hausdorff distance.
//!
//! Randomness comes from ChaCha8 seeded with the spec's 64-bit seed, which
//! yields identical streams on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covering::fps_select;
use crate::embedding::{dot, EmbeddingSet, IndexList};
use crate::error::{MobError, Result};
use crate::hausdorff::{coupling, Metric};

/// Relative tolerance on the achieved coupling.
pub const ETA_TOLERANCE: f64 = 0.15;

/// Copies are displaced by at most this fraction of the target coupling.
const PERTURBATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    /// A square lattice, `ceil(√n)` points per side, filled row by row.
    Grid2D,
    /// Evenly spaced points on a circle.
    Circle,
    /// Gaussian blobs around `c` random centers in a 4-dimensional subspace.
    GaussianClusters(usize),
}

impl Manifold {
    /// Dimension of the linear span the base manifold lives in.
    pub fn span_dim(&self) -> usize {
        match self {
            Manifold::Grid2D | Manifold::Circle => 2,
            Manifold::GaussianClusters(_) => 4,
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Manifold::Grid2D | Manifold::Circle => 0.5,
            Manifold::GaussianClusters(_) => 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n_v: usize,
    pub n_p: usize,
    pub ambient_d: usize,
    pub manifold: Manifold,
    pub eta_target: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_p == 0 || self.n_v < self.n_p {
            return Err(MobError::InvalidConfig(format!(
                "need n_v >= n_p >= 1, got n_v={}, n_p={}",
                self.n_v, self.n_p
            )));
        }
        // base direction + manifold span + one direction for the outlier
        let need = self.manifold.span_dim() + 2;
        if self.ambient_d < need {
            return Err(MobError::InvalidConfig(format!(
                "ambient dimension {} too small for {:?}, need at least {need}",
                self.ambient_d, self.manifold
            )));
        }
        if let Manifold::GaussianClusters(0) = self.manifold {
            return Err(MobError::InvalidConfig("need at least one cluster".into()));
        }
        if !(self.eta_target.is_finite() && self.eta_target >= 0.0) {
            return Err(MobError::InvalidConfig(format!(
                "eta_target must be finite and non-negative, got {}",
                self.eta_target
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub visual: EmbeddingSet,
    pub prompt: EmbeddingSet,
    pub measured_eta: f64,
}

/// Random orthonormal vectors of length `d` by Gram-Schmidt on Gaussian draws.
fn orthonormal_frame(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(count);
    while frame.len() < count {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for b in &frame {
            let proj = dot(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= proj * y;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            frame.push(v);
        }
    }
    frame
}

fn base_points(rng: &mut ChaCha8Rng, manifold: Manifold, n: usize) -> Vec<Vec<f64>> {
    match manifold {
        Manifold::Grid2D => {
            let side = (n as f64).sqrt().ceil() as usize;
            let step = if side > 1 {
                2.0 / (side - 1) as f64
            } else {
                0.0
            };
            (0..n)
                .map(|i| {
                    let (r, c) = (i / side, i % side);
                    vec![-1.0 + step * c as f64, -1.0 + step * r as f64]
                })
                .collect()
        }
        Manifold::Circle => {
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            (0..n)
                .map(|i| {
                    let t = phase + std::f64::consts::TAU * i as f64 / n as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        Manifold::GaussianClusters(c) => {
            let dim = manifold.span_dim();
            let centers: Vec<Vec<f64>> = (0..c)
                .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            (0..n)
                .map(|i| {
                    centers[i % c]
                        .iter()
                        .map(|m| m + 0.15 * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect()
        }
    }
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Generates a `(V, P)` pair per `spec`.
pub fn generate(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    let eta = spec.eta_target;
    if eta > 2.0 {
        return Err(MobError::InfeasibleEta(format!(
            "eta_target {eta} exceeds the unit-sphere diameter 2"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let span = spec.manifold.span_dim();
    let d = spec.ambient_d;
    let frame = orthonormal_frame(&mut rng, d, span + 2);
    let (e0, q, w) = (&frame[0], &frame[1..=span], &frame[span + 1]);

    let scale = spec.manifold.scale();
    let mut v_data = Vec::with_capacity(spec.n_v * d);
    for u in base_points(&mut rng, spec.manifold, spec.n_v) {
        let mut x = e0.clone();
        for (coef, col) in u.iter().zip(q) {
            for (xi, ci) in x.iter_mut().zip(col) {
                *xi += scale * coef * ci;
            }
        }
        v_data.extend(unit(x));
    }
    let visual = EmbeddingSet::new_normalized(v_data, spec.n_v, d)?;

    // well-spread base rows: the first n_p − 1 become perturbed copies, the
    // next one anchors the outlier
    let anchors = fps_select(&visual, &IndexList::empty(), spec.n_p.min(spec.n_v))?.selected;
    let (copies, outlier_base) = anchors.as_slice().split_at(spec.n_p - 1);
    let outlier_base = outlier_base[0];

    let mut p_data = Vec::with_capacity(spec.n_p * d);
    for &i in copies {
        let row = visual.row(i);
        if eta == 0.0 {
            p_data.extend_from_slice(row);
            continue;
        }
        let dir = unit((0..d).map(|_| rng.sample(StandardNormal)).collect());
        // rotate by an angle whose chord is at most PERTURBATION·eta
        let chord = PERTURBATION * eta * rng.random::<f64>();
        let theta = 2.0 * (chord / 2.0).asin();
        let tangent = {
            let proj = dot(&dir, row);
            unit(dir.iter().zip(row).map(|(a, b)| a - proj * b).collect())
        };
        p_data.extend(
            row.iter()
                .zip(&tangent)
                .map(|(r, t)| theta.cos() * r + theta.sin() * t),
        );
    }
    let base = visual.row(outlier_base);
    if eta == 0.0 {
        p_data.extend_from_slice(base);
    } else {
        let phi = 2.0 * (eta / 2.0).asin();
        p_data.extend(
            base.iter()
                .zip(w)
                .map(|(b, wi)| phi.cos() * b + phi.sin() * wi),
        );
    }
    let prompt = EmbeddingSet::new_normalized(p_data, spec.n_p, d)?;

    let measured_eta = coupling(&visual, &prompt, Metric::NormalizedEuclidean, None)?.eta;
    if (measured_eta - eta).abs() > ETA_TOLERANCE * eta {
        return Err(MobError::InfeasibleEta(format!(
            "achieved coupling {measured_eta:.4} is not within {:.0}% of {eta}; \
             {} prompt rows cannot cover {} visual rows at that radius",
            ETA_TOLERANCE * 100.0,
            spec.n_p,
            spec.n_v
        )));
    }
    Ok(Generated {
        visual,
        prompt,
        measured_eta,
    })
}
