//! Closed-loop stream data collection.
//!
//! A stream of feature-vector samples arrives one at a time; only a bounded
//! subset can be kept. This crate builds the dataset *during* collection:
//! each incoming sample is valued against an explicit target state (desired
//! class mix, relevance predicate, budgets) and the current estimate of the
//! retained dataset, then retained or discarded by an adaptive threshold
//! policy, which in turn updates the estimate the next decision will see.
//!
//! The pieces:
//!
//! - [`feature`], [`sample`], [`target`], [`state`], [`value`] — shared
//!   domain types: vectors and cosine similarity, stream samples, the
//!   target state, the online dataset-state estimate, value scores and
//!   actions.
//! - [`controller`] — the closed-loop engine itself.
//! - [`triggers`] — open-loop baselines: rule, semantic tag, residual, and
//!   warmup-frozen novelty triggers.
//! - [`metrics`] — dataset quality metrics (Vendi diversity, balance
//!   entropy, mean max similarity, relevance fraction) and report
//!   generation.
//! - [`simgen`] — seeded synthetic long-tail stream generator with optional
//!   mid-stream drift.
//! - [`experiment`] — config-driven experiments running many strategies
//!   over one shared stream, plus ranked comparison summaries.
//! - [`formats`] — schema-versioned, exactly round-tripping file formats
//!   for streams, datasets, decision logs, and reports.

pub mod controller;
pub mod error;
pub mod experiment;
pub mod feature;
pub mod formats;
pub mod metrics;
pub mod sample;
pub mod simgen;
pub mod state;
pub mod target;
pub mod triggers;
pub mod value;

pub use controller::{ClosedLoopEngine, DecisionRecord, EngineConfig, RunOutput};
pub use error::{Error, Result};
pub use feature::{cosine_similarity, normalize, FeatureVector};
pub use metrics::{evaluate_dataset, QualityReport};
pub use sample::Sample;
pub use simgen::{class_frequencies, generate, StreamConfig};
pub use state::DatasetStateEstimate;
pub use target::{ObjectiveWeights, TagPredicate, TargetState};
pub use value::{CollectionAction, Decision, ValueScore};
