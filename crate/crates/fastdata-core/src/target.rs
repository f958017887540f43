//! The target dataset state: the explicit encoding of what the collected
//! dataset should look like. Acts as the reference the closed loop steers
//! toward.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declarative predicate over a sample's tag set.
///
/// In config files the variants read as `"always"`, `{ has = "rain" }`,
/// `{ all = [...] }`, `{ any = [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagPredicate {
    /// Satisfied by every sample.
    Always,
    /// Satisfied when the tag is present.
    Has(String),
    /// Conjunction.
    All(Vec<TagPredicate>),
    /// Disjunction.
    Any(Vec<TagPredicate>),
}

impl TagPredicate {
    pub fn matches(&self, tags: &BTreeSet<String>) -> bool {
        match self {
            TagPredicate::Always => true,
            TagPredicate::Has(tag) => tags.contains(tag),
            TagPredicate::All(ps) => ps.iter().all(|p| p.matches(tags)),
            TagPredicate::Any(ps) => ps.iter().any(|p| p.matches(tags)),
        }
    }
}

/// Weights of the value-score components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub balance: f64,
    pub novelty: f64,
    pub relevance: f64,
    pub redundancy: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            balance: 1.0,
            novelty: 1.0,
            relevance: 1.0,
            redundancy: 1.0,
        }
    }
}

impl ObjectiveWeights {
    /// Largest attainable value score; upper clamp for the accept threshold.
    /// The redundancy weight only subtracts and is excluded.
    pub fn max_total(&self) -> f64 {
        self.balance + self.novelty + self.relevance
    }

    fn validate(&self) -> Result<()> {
        let ws = [self.balance, self.novelty, self.relevance, self.redundancy];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::ConfigError(
                "objective weights must be finite and nonnegative".into(),
            ));
        }
        if ws.iter().all(|w| *w == 0.0) {
            return Err(Error::ConfigError(
                "objective weights must not all be zero".into(),
            ));
        }
        Ok(())
    }
}

/// Desired properties of the collected dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    /// Desired class distribution; must sum to 1.
    pub class_distribution: Vec<f64>,
    /// Which samples count as relevant.
    pub relevance: TagPredicate,
    /// Hard cap on the retained dataset size.
    pub max_dataset_size: usize,
    /// Desired accepted-per-offered rate in (0, 1].
    pub target_accept_rate: f64,
    /// Capacity of the representative-embedding sketch.
    pub sketch_capacity: usize,
    pub weights: ObjectiveWeights,
}

impl TargetState {
    /// Target with a uniform class distribution.
    pub fn uniform(
        num_classes: usize,
        relevance: TagPredicate,
        max_dataset_size: usize,
        target_accept_rate: f64,
        sketch_capacity: usize,
        weights: ObjectiveWeights,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::ConfigError("num_classes must be positive".into()));
        }
        let t = Self {
            class_distribution: vec![1.0 / num_classes as f64; num_classes],
            relevance,
            max_dataset_size,
            target_accept_rate,
            sketch_capacity,
            weights,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn num_classes(&self) -> usize {
        self.class_distribution.len()
    }

    /// Check every construction invariant. Call after any mutation.
    pub fn validate(&self) -> Result<()> {
        if self.class_distribution.is_empty() {
            return Err(Error::ConfigError("class distribution is empty".into()));
        }
        if self
            .class_distribution
            .iter()
            .any(|p| !p.is_finite() || *p < 0.0)
        {
            return Err(Error::ConfigError(
                "class distribution entries must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = self.class_distribution.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::ConfigError(format!(
                "class distribution sums to {sum}, expected 1"
            )));
        }
        if self.max_dataset_size < 1 {
            return Err(Error::ConfigError("max_dataset_size must be >= 1".into()));
        }
        if !(self.target_accept_rate > 0.0 && self.target_accept_rate <= 1.0) {
            return Err(Error::ConfigError(
                "target_accept_rate must be in (0, 1]".into(),
            ));
        }
        if self.sketch_capacity < 1 {
            return Err(Error::ConfigError("sketch_capacity must be >= 1".into()));
        }
        self.weights.validate()
    }
}
