//! Sequence-space vocabulary: multi-indices, Sobolev ellipsoids and sparse
//! coefficient vectors.
//!
//! Everything downstream (operators, nets, simulation, estimators) works in
//! the coordinates of an orthonormal basis, so L2 geometry is Euclidean over
//! these types by Parseval.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// A d-tuple of nonnegative integers, optionally carrying sine/cosine parity
/// bits for the real Fourier system.
///
/// Invariants: `k`, when present, has the same length as `j`, entries in
/// {0, 1}, and `k_i = 0` whenever `j_i = 0`. Sequence-space machinery (nets,
/// packings, white-noise observations) uses untagged indices; tagged indices
/// appear where concrete 1-periodic functions are evaluated. An untagged
/// Fourier index evaluates as the cosine member of its frequency pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    j: Vec<u32>,
    k: Option<Vec<u8>>,
}

impl MultiIndex {
    pub fn new(j: Vec<u32>) -> Self {
        Self { j, k: None }
    }

    pub fn with_parity(j: Vec<u32>, k: Vec<u8>) -> Result<Self> {
        if j.len() != k.len() {
            return Err(Error::DimensionMismatch(format!(
                "index has {} coordinates but parity tag has {}",
                j.len(),
                k.len()
            )));
        }
        for (ji, ki) in j.iter().zip(k.iter()) {
            if !matches!(ki, 0 | 1) {
                return Err(Error::InvalidParameter(format!(
                    "parity bit must be 0 or 1, got {ki}"
                )));
            }
            if *ji == 0 && *ki != 0 {
                return Err(Error::InvalidParameter(
                    "parity bit must be 0 where the frequency is 0".into(),
                ));
            }
        }
        Ok(Self { j, k: Some(k) })
    }

    /// Convenience constructor for d = 1.
    pub fn scalar(j: u32) -> Self {
        Self::new(vec![j])
    }

    /// Convenience constructor for d = 2.
    pub fn pair(j1: u32, j2: u32) -> Self {
        Self::new(vec![j1, j2])
    }

    pub fn dim(&self) -> usize {
        self.j.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.j
    }

    pub fn parity(&self) -> Option<&[u8]> {
        self.k.as_deref()
    }

    /// |j| = j_1 + ... + j_d.
    pub fn total(&self) -> u32 {
        self.j.iter().sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, ji) in self.j.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{ji}")?;
        }
        if let Some(k) = &self.k {
            write!(f, ";")?;
            for ki in k {
                write!(f, "{ki}")?;
            }
        }
        write!(f, ")")
    }
}

/// Sobolev ellipsoid Θ = {θ : Σ a_j² θ_j² ≤ L²} with a_j = max(1, |j|)^s.
///
/// The max(1, ·) floor keeps the constant coefficient constrained (a
/// literal |j|^s would leave a_0 = 0 and the ellipsoid unbounded) while
/// preserving the two-sided bound a_j = |j|^s for |j| ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidSpec {
    d: usize,
    s: f64,
    l: f64,
}

impl EllipsoidSpec {
    pub fn new(d: usize, s: f64, l: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothness must be positive, got {s}"
            )));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {l}"
            )));
        }
        Ok(Self { d, s, l })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn smoothness(&self) -> f64 {
        self.s
    }

    pub fn radius(&self) -> f64 {
        self.l
    }

    /// a_j = max(1, |j|)^s.
    pub fn coeff(&self, index: &MultiIndex) -> f64 {
        f64::from(index.total().max(1)).powf(self.s)
    }

    /// Σ a_j² θ_j².
    pub fn weighted_norm_sq(&self, theta: &CoefVec) -> f64 {
        theta
            .iter()
            .map(|(j, v)| {
                let a = self.coeff(j);
                a * a * v * v
            })
            .sum()
    }

    /// Membership predicate θ ∈ Θ, with a relative slack for accumulated
    /// rounding in the weighted sum.
    pub fn contains(&self, theta: &CoefVec) -> bool {
        self.weighted_norm_sq(theta) <= self.l * self.l * (1.0 + 1e-12)
    }
}

/// Finitely supported coefficient vector. Absent indices mean zero; explicit
/// zeros are never stored, so `support_len` counts nonzero coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefVec {
    entries: BTreeMap<MultiIndex, f64>,
}

impl CoefVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (MultiIndex, f64)>>(pairs: I) -> Self {
        let mut v = Self::new();
        for (j, x) in pairs {
            v.set(j, x);
        }
        v
    }

    pub fn get(&self, index: &MultiIndex) -> f64 {
        self.entries.get(index).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, index: MultiIndex, value: f64) {
        if value == 0.0 {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.entries.iter()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product over the union of supports.
    pub fn dot(&self, other: &CoefVec) -> f64 {
        // Iterate over the smaller support.
        let (small, large) = if self.support_len() <= other.support_len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().map(|(j, v)| v * large.get(j)).sum()
    }

    pub fn scale(&self, c: f64) -> CoefVec {
        CoefVec::from_pairs(self.iter().map(|(j, v)| (j.clone(), c * v)))
    }

    pub fn add(&self, other: &CoefVec) -> CoefVec {
        let mut out = self.clone();
        for (j, v) in other.iter() {
            let cur = out.get(j);
            out.set(j.clone(), cur + v);
        }
        out
    }

    pub fn sub(&self, other: &CoefVec) -> CoefVec {
        let mut out = self.clone();
        for (j, v) in other.iter() {
            let cur = out.get(j);
            out.set(j.clone(), cur - v);
        }
        out
    }

    /// Restriction to an index list.
    pub fn restrict(&self, indices: &[MultiIndex]) -> CoefVec {
        CoefVec::from_pairs(indices.iter().map(|j| (j.clone(), self.get(j))))
    }
}

/// ℓ2 distance √(Σ (θ_j − θ'_j)²) over the union of supports; by Parseval
/// this is the L2 distance of the represented functions.
pub fn l2_dist(a: &CoefVec, b: &CoefVec) -> f64 {
    let mut acc = 0.0;
    for (j, v) in a.iter() {
        let d = v - b.get(j);
        acc += d * d;
    }
    for (j, v) in b.iter() {
        if a.get(j) == 0.0 && !a.entries.contains_key(j) {
            acc += v * v;
        }
    }
    acc.sqrt()
}
