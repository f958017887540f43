//! The closed-loop collection engine: per-sample valuation against the
//! target, threshold policy, recursive state update, and the stream
//! processing loop.
//!
//! One engine instance processes one stream strictly in order; the state
//! recursion makes ordering semantically required. Engines over disjoint
//! streams are independent and may run in parallel.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::feature::normalize;
use crate::sample::Sample;
use crate::state::{DatasetStateEstimate, SketchEntry};
use crate::target::TargetState;
use crate::value::{CollectionAction, Decision, Reason, ReasonCode, ValueScore};

/// Tunables of the engine loop. Defaults match the documented control law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    /// Accept threshold at stream start.
    pub initial_threshold: f64,
    /// Integral gain of the acceptance-rate controller.
    pub rate_gain: f64,
    /// EMA smoothing factor of the acceptance-rate estimate.
    pub ema_alpha: f64,
    /// Max sketch comparisons per offered sample; larger sketches are
    /// scored on a seeded uniform subsample.
    pub step_budget: usize,
    /// Use ground-truth labels for the balance term instead of the
    /// nearest-sketch-neighbor estimate. Upper-bound experiments only.
    pub oracle_labeled: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            initial_threshold: 0.0,
            rate_gain: 0.05,
            ema_alpha: 0.01,
            step_budget: 1024,
            oracle_labeled: false,
        }
    }
}

impl EngineConfig {
    fn validate(&self) -> Result<()> {
        if !self.initial_threshold.is_finite() || self.initial_threshold < 0.0 {
            return Err(Error::ConfigError(
                "initial_threshold must be finite and >= 0".into(),
            ));
        }
        if !self.rate_gain.is_finite() || self.rate_gain < 0.0 {
            return Err(Error::ConfigError("rate_gain must be >= 0".into()));
        }
        if !(self.ema_alpha > 0.0 && self.ema_alpha <= 1.0) {
            return Err(Error::ConfigError("ema_alpha must be in (0, 1]".into()));
        }
        if self.step_budget == 0 {
            return Err(Error::ConfigError("step_budget must be >= 1".into()));
        }
        Ok(())
    }
}

/// One line of the per-sample decision log.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub step: u64,
    pub sample_id: u64,
    pub balance_gain: f64,
    pub novelty_gain: f64,
    pub relevance_score: f64,
    pub redundancy_penalty: f64,
    pub total: f64,
    /// Threshold in force when the decision was taken.
    pub threshold: f64,
    pub decision: Decision,
    pub reason: Reason,
}

impl DecisionRecord {
    pub fn from_action(step: u64, sample_id: u64, threshold: f64, action: &CollectionAction) -> Self {
        Self {
            step,
            sample_id,
            balance_gain: action.value.balance_gain,
            novelty_gain: action.value.novelty_gain,
            relevance_score: action.value.relevance_score,
            redundancy_penalty: action.value.redundancy_penalty,
            total: action.value.total,
            threshold,
            decision: action.decision,
            reason: action.value.reason,
        }
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dataset: Vec<Sample>,
    pub log: Vec<DecisionRecord>,
    pub final_state: DatasetStateEstimate,
    /// Largest number of sketch comparisons any single sample cost.
    pub max_step_comparisons: usize,
}

/// A failed run, with whatever was produced before the failure so the
/// caller can flush partial logs.
#[derive(Debug)]
pub struct StreamFailure {
    pub error: Error,
    pub partial_dataset: Vec<Sample>,
    pub partial_log: Vec<DecisionRecord>,
}

/// Closed-loop dataset collection engine.
pub struct ClosedLoopEngine {
    target: TargetState,
    config: EngineConfig,
    state: DatasetStateEstimate,
    dataset: Vec<Sample>,
    rng: ChaCha12Rng,
    expected_dim: Option<usize>,
    last_id: Option<u64>,
    last_step_comparisons: usize,
    max_step_comparisons: usize,
}

impl ClosedLoopEngine {
    pub fn new(target: TargetState, config: EngineConfig, seed: u64) -> Result<Self> {
        target.validate()?;
        config.validate()?;
        let state = DatasetStateEstimate::new(target.num_classes(), config.initial_threshold);
        Ok(Self {
            target,
            config,
            state,
            dataset: Vec::new(),
            rng: ChaCha12Rng::seed_from_u64(seed),
            expected_dim: None,
            last_id: None,
            last_step_comparisons: 0,
            max_step_comparisons: 0,
        })
    }

    pub fn state(&self) -> &DatasetStateEstimate {
        &self.state
    }

    pub fn dataset(&self) -> &[Sample] {
        &self.dataset
    }

    pub fn target(&self) -> &TargetState {
        &self.target
    }

    pub fn max_step_comparisons(&self) -> usize {
        self.max_step_comparisons
    }

    pub fn last_step_comparisons(&self) -> usize {
        self.last_step_comparisons
    }

    fn check_sample(&mut self, sample: &Sample) -> Result<()> {
        if !sample.features.is_finite() {
            return Err(Error::InvalidSample {
                id: sample.id,
                msg: "non-finite feature entry".into(),
            });
        }
        match self.expected_dim {
            None => self.expected_dim = Some(sample.features.len()),
            Some(d) if d != sample.features.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: sample.features.len(),
                });
            }
            _ => {}
        }
        if let Some(prev) = self.last_id {
            if sample.id <= prev {
                return Err(Error::InvalidSample {
                    id: sample.id,
                    msg: format!("ids must be strictly increasing, previous was {prev}"),
                });
            }
        }
        if sample.label >= self.target.num_classes() {
            return Err(Error::InvalidSample {
                id: sample.id,
                msg: format!(
                    "label {} outside target's {} classes",
                    sample.label,
                    self.target.num_classes()
                ),
            });
        }
        self.last_id = Some(sample.id);
        Ok(())
    }

    /// Score one sample against the current state and target.
    ///
    /// At most `step_budget` sketch entries are compared; beyond that a
    /// seeded uniform subsample is scored and the reason notes it.
    pub fn value_of(&mut self, sample: &Sample) -> Result<ValueScore> {
        self.state.validate(&self.target)?;
        let weights = self.target.weights;
        let relevance_score = if self.target.relevance.matches(&sample.tags) {
            1.0
        } else {
            0.0
        };

        if self.state.sketch.is_empty() {
            // Empty-state conventions: everything is novel, the first
            // sample of any class closes its full deficit.
            self.last_step_comparisons = 0;
            return Ok(ValueScore::from_components(
                &weights,
                1.0,
                1.0,
                relevance_score,
                0.0,
                Reason::new(ReasonCode::Scored),
            ));
        }

        let z = normalize(&sample.features).map_err(|e| match e {
            Error::InvalidFeature(msg) => Error::InvalidSample {
                id: sample.id,
                msg,
            },
            other => other,
        })?;

        let sketch_len = self.state.sketch.len();
        let subsampled = sketch_len > self.config.step_budget;
        let compared: Vec<usize> = if subsampled {
            let mut idx =
                index_sample(&mut self.rng, sketch_len, self.config.step_budget).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..sketch_len).collect()
        };
        self.last_step_comparisons = compared.len();
        self.max_step_comparisons = self.max_step_comparisons.max(compared.len());

        let mut max_cos = f64::NEG_INFINITY;
        let mut nearest_label = 0usize;
        for &i in &compared {
            let entry = &self.state.sketch[i];
            let sim = z.dot(&entry.features).clamp(-1.0, 1.0);
            if sim > max_cos {
                max_cos = sim;
                nearest_label = entry.label;
            }
        }
        let max_cos = max_cos.max(0.0);
        let novelty_gain = 1.0 - max_cos;
        let redundancy_penalty = max_cos;

        let class = if self.config.oracle_labeled {
            sample.label
        } else {
            nearest_label
        };
        let balance_gain = if self.state.retained_count == 0 {
            1.0
        } else {
            let target_share = self.target.class_distribution[class];
            if target_share <= 0.0 {
                0.0
            } else {
                (target_share - self.state.class_share(class)).max(0.0) / target_share
            }
        };

        Ok(ValueScore::from_components(
            &weights,
            balance_gain,
            novelty_gain,
            relevance_score,
            redundancy_penalty,
            Reason {
                code: ReasonCode::Scored,
                subsampled,
            },
        ))
    }

    /// Turn a score into a retain/discard action under the threshold in
    /// force. Ties retain; a full dataset always discards.
    pub fn decide(&self, value: ValueScore) -> CollectionAction {
        if self.dataset.len() >= self.target.max_dataset_size {
            return CollectionAction {
                decision: Decision::Discard,
                value: ValueScore {
                    reason: value.reason.with_code(ReasonCode::BudgetFull),
                    ..value
                },
            };
        }
        if value.total >= self.state.accept_threshold {
            CollectionAction {
                decision: Decision::Retain,
                value: ValueScore {
                    reason: value.reason.with_code(ReasonCode::AboveThreshold),
                    ..value
                },
            }
        } else {
            CollectionAction {
                decision: Decision::Discard,
                value: ValueScore {
                    reason: value.reason.with_code(ReasonCode::BelowThreshold),
                    ..value
                },
            }
        }
    }

    /// Fold the decided sample into the state estimate (and, on retain,
    /// the dataset). Counters move on every sample; the sketch only on
    /// retention. A full sketch evicts a random entry of a modal class.
    pub fn update_state(&mut self, sample: &Sample, action: &CollectionAction) {
        self.state.offered_count += 1;
        let retained = action.decision == Decision::Retain;
        if retained {
            self.dataset.push(sample.clone());
            self.state.retained_count += 1;
            self.state.class_counts[sample.label] += 1;
            // Zero vectors stay zero under normalize and score 0 everywhere.
            let z = normalize(&sample.features).expect("validated in offer");
            self.state.sketch.push(SketchEntry {
                features: z,
                label: sample.label,
            });
            if self.state.sketch.len() > self.target.sketch_capacity {
                self.evict_modal_entry();
            }
        }
        let alpha = self.config.ema_alpha;
        self.state.accept_rate_ema = (1.0 - alpha) * self.state.accept_rate_ema
            + alpha * if retained { 1.0 } else { 0.0 };
    }

    fn evict_modal_entry(&mut self) {
        let mut counts = vec![0u64; self.target.num_classes()];
        for e in &self.state.sketch {
            counts[e.label] += 1;
        }
        let modal = counts.iter().copied().max().unwrap_or(0);
        let candidates: Vec<usize> = self
            .state
            .sketch
            .iter()
            .enumerate()
            .filter(|(_, e)| counts[e.label] == modal)
            .map(|(i, _)| i)
            .collect();
        let pick = candidates[self.rng.gen_range(0..candidates.len())];
        self.state.sketch.swap_remove(pick);
    }

    /// Integral controller on the acceptance rate: acceptance above target
    /// raises the threshold, below target lowers it. Call once per sample,
    /// after the state update. Returns the new threshold.
    pub fn adapt_threshold(&mut self) -> f64 {
        let t = self.state.accept_threshold
            + self.config.rate_gain * (self.state.accept_rate_ema - self.target.target_accept_rate);
        self.state.accept_threshold = t.clamp(0.0, self.target.weights.max_total());
        self.state.accept_threshold
    }

    /// Run one full loop step for the next stream sample.
    pub fn offer(&mut self, sample: &Sample) -> Result<DecisionRecord> {
        self.check_sample(sample)?;
        let step = self.state.offered_count;
        let threshold = self.state.accept_threshold;
        let value = self.value_of(sample)?;
        let action = self.decide(value);
        self.update_state(sample, &action);
        self.adapt_threshold();
        Ok(DecisionRecord::from_action(step, sample.id, threshold, &action))
    }

    /// Process an ordered stream to completion. Identical (target, config,
    /// seed, stream) triples produce bitwise-identical outputs. On failure
    /// the partial log and dataset are returned for flushing.
    pub fn process_stream<I>(mut self, stream: I) -> std::result::Result<RunOutput, StreamFailure>
    where
        I: IntoIterator<Item = Sample>,
    {
        let mut log = Vec::new();
        for sample in stream {
            match self.offer(&sample) {
                Ok(record) => log.push(record),
                Err(error) => {
                    return Err(StreamFailure {
                        error,
                        partial_dataset: self.dataset,
                        partial_log: log,
                    });
                }
            }
        }
        Ok(RunOutput {
            dataset: self.dataset,
            log,
            final_state: self.state,
            max_step_comparisons: self.max_step_comparisons,
        })
    }
}
