//! Embedding container and the cosine-induced metric.
//!
//! Rows are stored row-major in `f64`. Once rows are L2-normalized the
//! Euclidean distance between two rows is a function of their cosine alone,
//! `‖x − y‖ = √(2 − 2 cos(x, y))`, which is what lets the selector work on a
//! similarity matrix while reporting radii in distance units.

use serde::{Deserialize, Serialize};

use crate::error::{MobError, Result};

/// Rows whose norm falls at or below this are rejected by [`EmbeddingSet::normalize`].
pub const ZERO_NORM: f64 = 1e-12;

/// Tolerance on `|‖row‖ − 1|` for a set flagged as normalized.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// An `n × d` matrix of token embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: Vec<f64>,
    n: usize,
    d: usize,
    normalized: bool,
}

impl EmbeddingSet {
    /// Builds a set from row-major data. Every value must be finite.
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(MobError::EmptyShape { n, d });
        }
        if data.len() != n * d {
            return Err(MobError::ShapeMismatch {
                len: data.len(),
                n,
                d,
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(MobError::NonFiniteValue {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self {
            data,
            n,
            d,
            normalized: false,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(MobError::DimensionMismatch {
                    left: d,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, n, d)
    }

    /// Builds a set and marks it normalized after checking every row is unit length.
    pub fn new_normalized(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        let mut set = Self::new(data, n, d)?;
        for i in 0..n {
            let norm = dot(set.row(i), set.row(i)).sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(MobError::NotNormalized);
            }
        }
        set.normalized = true;
        Ok(set)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    /// Divides every row by its Euclidean norm.
    pub fn normalize(&self) -> Result<Self> {
        let mut data = Vec::with_capacity(self.data.len());
        for (i, row) in self.rows().enumerate() {
            let norm = dot(row, row).sqrt();
            if norm <= ZERO_NORM {
                return Err(MobError::ZeroVector { row: i, norm });
            }
            data.extend(row.iter().map(|x| x / norm));
        }
        Ok(Self {
            data,
            n: self.n,
            d: self.d,
            normalized: true,
        })
    }

    /// Returns `self` unchanged when already normalized, else a normalized copy.
    pub fn to_normalized(&self) -> Result<std::borrow::Cow<'_, Self>> {
        if self.normalized {
            Ok(std::borrow::Cow::Borrowed(self))
        } else {
            self.normalize().map(std::borrow::Cow::Owned)
        }
    }

    /// Copies the given rows, in order, into a new set. The normalized flag is kept.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(MobError::EmptySet);
        }
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(MobError::IndexOutOfRange {
                    index: i,
                    n: self.n,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self {
            data,
            n: indices.len(),
            d: self.d,
            normalized: self.normalized,
        })
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(MobError::DimensionMismatch {
                left: self.d,
                right: other.d,
            });
        }
        Ok(())
    }
}

/// Ordered, duplicate-free row indices into an [`EmbeddingSet`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexList(Vec<usize>);

impl IndexList {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(MobError::IndexOutOfRange { index: i, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(MobError::DuplicateIndex(i));
            }
        }
        Ok(Self(indices))
    }

    pub(crate) fn from_vec_unchecked(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl AsRef<[usize]> for IndexList {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

/// Dense `rows × cols` matrix of cosines, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl CosineMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Sequential dot product. The accumulation order is fixed so that every
/// caller sees bit-identical similarities for the same pair of rows.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        acc += t * t;
    }
    acc
}

/// Cosine of two unit rows, clamped to `[-1, 1]`.
#[inline]
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0)
}

/// All pairwise cosines between the rows of two normalized sets.
pub fn cosine_matrix(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<CosineMatrix> {
    a.check_same_dim(b)?;
    if !a.is_normalized() || !b.is_normalized() {
        return Err(MobError::NotNormalized);
    }
    let mut data = Vec::with_capacity(a.n() * b.n());
    for ra in a.rows() {
        data.extend(b.rows().map(|rb| cosine(ra, rb)));
    }
    Ok(CosineMatrix {
        rows: a.n(),
        cols: b.n(),
        data,
    })
}

/// Euclidean distance between two unit vectors with cosine `c`.
#[inline]
pub fn euclid_from_cos(c: f64) -> f64 {
    let c = c.clamp(-1.0, 1.0);
    (2.0 - 2.0 * c).max(0.0).sqrt()
}
