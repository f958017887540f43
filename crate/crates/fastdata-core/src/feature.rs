//! Fixed-length real feature vectors and the pairwise similarity measure
//! used throughout the crate.
//!
//! Similarity is cosine on L2-normalized vectors. Zero vectors carry no
//! directional information and have similarity 0 to everything, which keeps
//! every downstream computation NaN-free.

use crate::error::{Error, Result};

/// A fixed-length vector of real-valued features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// True when every entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidFeature(
                "non-finite entry in feature vector".into(),
            ))
        }
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Scale `v` to unit L2 norm. The all-zero vector is returned unchanged.
pub fn normalize(v: &FeatureVector) -> Result<FeatureVector> {
    if v.is_empty() {
        return Err(Error::InvalidFeature("empty feature vector".into()));
    }
    v.check_finite()?;
    let norm = v.l2_norm();
    if norm == 0.0 {
        return Ok(v.clone());
    }
    Ok(FeatureVector::new(
        v.values().iter().map(|x| x / norm).collect(),
    ))
}

/// Cosine similarity of two vectors, clamped to [-1, 1].
///
/// Returns 0 when either vector is all-zero.
pub fn cosine_similarity(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    a.check_finite()?;
    b.check_finite()?;
    let na = a.l2_norm();
    let nb = b.l2_norm();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((a.dot(b) / (na * nb)).clamp(-1.0, 1.0))
}
