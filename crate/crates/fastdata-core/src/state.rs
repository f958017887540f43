//! Online estimate of the retained dataset's state: class histogram, bounded
//! representative sketch, counters, and the live accept threshold. This is
//! the compact summary the loop feeds back on, standing in for the full
//! retained dataset.

use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::target::TargetState;

/// One sketch slot: a normalized feature vector and its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchEntry {
    pub features: FeatureVector,
    pub label: usize,
}

/// Compact running summary of the retained dataset.
///
/// Single-writer: exactly one engine mutates an instance, in stream order.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStateEstimate {
    /// Retained-sample histogram over classes.
    pub class_counts: Vec<u64>,
    /// Up to `sketch_capacity` representative embeddings.
    pub sketch: Vec<SketchEntry>,
    /// Number of retained samples.
    pub retained_count: u64,
    /// Number of offered samples (stream position).
    pub offered_count: u64,
    /// Accept threshold currently in force.
    pub accept_threshold: f64,
    /// Exponentially weighted acceptance-rate estimate in [0, 1].
    pub accept_rate_ema: f64,
}

impl DatasetStateEstimate {
    pub fn new(num_classes: usize, initial_threshold: f64) -> Self {
        Self {
            class_counts: vec![0; num_classes],
            sketch: Vec::new(),
            retained_count: 0,
            offered_count: 0,
            accept_threshold: initial_threshold,
            accept_rate_ema: 0.0,
        }
    }

    /// Share of retained samples with the given class, 0 when nothing is
    /// retained yet.
    pub fn class_share(&self, class: usize) -> f64 {
        if self.retained_count == 0 {
            0.0
        } else {
            self.class_counts[class] as f64 / self.retained_count as f64
        }
    }

    /// Check every structural invariant against the target. Call after any
    /// mutation.
    pub fn validate(&self, target: &TargetState) -> Result<()> {
        if self.class_counts.len() != target.num_classes() {
            return Err(Error::StateCorruption(format!(
                "class count arity {} does not match target {}",
                self.class_counts.len(),
                target.num_classes()
            )));
        }
        let sum: u64 = self.class_counts.iter().sum();
        if sum != self.retained_count {
            return Err(Error::StateCorruption(format!(
                "class counts sum to {sum} but retained_count is {}",
                self.retained_count
            )));
        }
        if self.sketch.len() > target.sketch_capacity {
            return Err(Error::StateCorruption(format!(
                "sketch holds {} entries, capacity is {}",
                self.sketch.len(),
                target.sketch_capacity
            )));
        }
        if self.retained_count > self.offered_count
            || self.retained_count > target.max_dataset_size as u64
        {
            return Err(Error::StateCorruption(format!(
                "retained_count {} exceeds offered {} or budget {}",
                self.retained_count, self.offered_count, target.max_dataset_size
            )));
        }
        if !(0.0..=1.0).contains(&self.accept_rate_ema) {
            return Err(Error::StateCorruption(format!(
                "accept_rate_ema {} outside [0, 1]",
                self.accept_rate_ema
            )));
        }
        Ok(())
    }
}
