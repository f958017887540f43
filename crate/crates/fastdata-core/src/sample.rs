//! Stream elements.

use std::collections::BTreeSet;

use crate::feature::FeatureVector;

/// One element of a data stream: a feature vector plus the metadata the
/// collection strategies may act on.
///
/// `label` is ground truth from the stream generator. Collection decisions
/// must not read it unless the strategy is explicitly oracle-labeled; the
/// state estimator may use it when accounting for already-retained samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Monotonically increasing sequence number within a stream.
    pub id: u64,
    pub features: FeatureVector,
    /// Short semantic metadata tags. Ordered set for deterministic output.
    pub tags: BTreeSet<String>,
    /// Class identifier in `0..num_classes`.
    pub label: usize,
    /// Step index at which the sample was emitted.
    pub timestamp: u64,
}

impl Sample {
    pub fn new(
        id: u64,
        features: FeatureVector,
        tags: BTreeSet<String>,
        label: usize,
        timestamp: u64,
    ) -> Self {
        Self {
            id,
            features,
            tags,
            label,
            timestamp,
        }
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }
}
