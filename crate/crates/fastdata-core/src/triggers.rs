//! Baseline trigger functions used as comparison strategies against the
//! closed loop.
//!
//! Rule, semantic, and error triggers are data-intrinsic: their decisions
//! depend only on the incoming sample (and, for the error trigger, the raw
//! stream history), never on what has been retained. The frozen-novelty
//! trigger scores samples against a reference set captured once during
//! warmup and never updated afterwards; that staticness is its defining
//! property as a baseline.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::{cosine_similarity, normalize, FeatureVector};
use crate::sample::Sample;

/// Comparison operator for rule triggers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "<")]
    Less,
    #[serde(rename = ">=")]
    GreaterEq,
    #[serde(rename = "<=")]
    LessEq,
}

impl Comparator {
    pub fn eval(self, observed: f64, threshold: f64) -> bool {
        match self {
            Comparator::Greater => observed > threshold,
            Comparator::Less => observed < threshold,
            Comparator::GreaterEq => observed >= threshold,
            Comparator::LessEq => observed <= threshold,
        }
    }
}

/// Stateless threshold condition on one raw feature.
#[derive(Debug, Clone)]
pub struct RuleTrigger {
    feature_index: usize,
    comparator: Comparator,
    threshold: f64,
}

impl RuleTrigger {
    /// `dimension` is the stream's feature dimension; an out-of-range index
    /// is a config error here, never an evaluation error.
    pub fn new(
        feature_index: usize,
        comparator: Comparator,
        threshold: f64,
        dimension: usize,
    ) -> Result<Self> {
        if feature_index >= dimension {
            return Err(Error::ConfigError(format!(
                "rule trigger index {feature_index} out of range for dimension {dimension}"
            )));
        }
        if !threshold.is_finite() {
            return Err(Error::ConfigError("rule threshold must be finite".into()));
        }
        Ok(Self {
            feature_index,
            comparator,
            threshold,
        })
    }

    pub fn evaluate(&self, sample: &Sample) -> bool {
        self.comparator
            .eval(sample.features.values()[self.feature_index], self.threshold)
    }
}

/// Tag-set matching mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    All,
    Any,
}

/// Stateless predicate over a sample's metadata tags. Stands in for
/// model-based semantic triggers; any richer predicate can be slotted in
/// behind the same boolean interface.
#[derive(Debug, Clone)]
pub struct SemanticTrigger {
    required_tags: BTreeSet<String>,
    mode: MatchMode,
}

impl SemanticTrigger {
    pub fn new(required_tags: BTreeSet<String>, mode: MatchMode) -> Result<Self> {
        if required_tags.is_empty() {
            return Err(Error::ConfigError(
                "semantic trigger needs at least one tag".into(),
            ));
        }
        Ok(Self {
            required_tags,
            mode,
        })
    }

    pub fn evaluate(&self, sample: &Sample) -> bool {
        match self.mode {
            MatchMode::All => self.required_tags.iter().all(|t| sample.tags.contains(t)),
            MatchMode::Any => self.required_tags.iter().any(|t| sample.tags.contains(t)),
        }
    }
}

/// Expected-vs-observed residual trigger: fires when one monitored feature
/// deviates from its trailing moving average by more than a threshold.
/// Always quiet until the window has filled.
#[derive(Debug, Clone)]
pub struct ErrorTrigger {
    window_length: usize,
    residual_threshold: f64,
    monitored_index: usize,
    window: VecDeque<f64>,
}

impl ErrorTrigger {
    pub fn new(
        window_length: usize,
        residual_threshold: f64,
        monitored_index: usize,
        dimension: usize,
    ) -> Result<Self> {
        if window_length < 2 {
            return Err(Error::ConfigError("error trigger window must be >= 2".into()));
        }
        if residual_threshold <= 0.0 || !residual_threshold.is_finite() {
            return Err(Error::ConfigError(
                "error trigger residual threshold must be positive".into(),
            ));
        }
        if monitored_index >= dimension {
            return Err(Error::ConfigError(format!(
                "error trigger index {monitored_index} out of range for dimension {dimension}"
            )));
        }
        Ok(Self {
            window_length,
            residual_threshold,
            monitored_index,
            window: VecDeque::with_capacity(window_length + 1),
        })
    }

    /// Evaluate, then absorb the observation into the window.
    pub fn evaluate(&mut self, sample: &Sample) -> bool {
        let observed = sample.features.values()[self.monitored_index];
        let fired = if self.window.len() == self.window_length {
            let expected: f64 =
                self.window.iter().sum::<f64>() / self.window_length as f64;
            (observed - expected).abs() > self.residual_threshold
        } else {
            false
        };
        self.window.push_back(observed);
        if self.window.len() > self.window_length {
            self.window.pop_front();
        }
        fired
    }
}

/// What a frozen-novelty trigger says about one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoveltyObservation {
    /// Still building the reference; retain unconditionally.
    Warmup,
    /// Novelty score in [0, 1]; retain when it exceeds the threshold.
    Score(f64),
}

/// Static novelty scorer: the reference set is frozen after the first
/// `warmup` samples and retention decisions never feed back into it.
#[derive(Debug, Clone)]
pub struct FrozenNoveltyTrigger {
    warmup: usize,
    novelty_threshold: f64,
    reference: Vec<FeatureVector>,
}

impl FrozenNoveltyTrigger {
    pub fn new(warmup: usize, novelty_threshold: f64) -> Result<Self> {
        if warmup < 1 {
            return Err(Error::ConfigError(
                "frozen novelty warmup must be >= 1".into(),
            ));
        }
        if !(novelty_threshold > 0.0 && novelty_threshold < 1.0) {
            return Err(Error::ConfigError(
                "novelty threshold must be in (0, 1)".into(),
            ));
        }
        Ok(Self {
            warmup,
            novelty_threshold,
            reference: Vec::with_capacity(warmup),
        })
    }

    pub fn novelty_threshold(&self) -> f64 {
        self.novelty_threshold
    }

    pub fn reference_len(&self) -> usize {
        self.reference.len()
    }

    /// Observe the next stream sample in order. During warmup the sample
    /// joins the reference set; afterwards it is scored against the frozen
    /// reference: 1 minus the largest nonnegative cosine similarity.
    pub fn observe(&mut self, sample: &Sample) -> Result<NoveltyObservation> {
        if self.reference.len() < self.warmup {
            self.reference.push(normalize(&sample.features)?);
            return Ok(NoveltyObservation::Warmup);
        }
        let z = normalize(&sample.features)?;
        let mut max_sim = 0.0f64;
        for r in &self.reference {
            max_sim = max_sim.max(cosine_similarity(&z, r)?);
        }
        Ok(NoveltyObservation::Score(1.0 - max_sim))
    }

    /// Whether a scored sample should be retained.
    pub fn retains(&self, novelty: f64) -> bool {
        novelty > self.novelty_threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: u64, features: &[f64], tags: &[&str]) -> Sample {
        Sample::new(
            id,
            FeatureVector::new(features.to_vec()),
            tags.iter().map(|s| s.to_string()).collect(),
            0,
            id,
        )
    }

    #[test]
    fn rule_trigger_comparators() {
        let d = 3;
        let gt = RuleTrigger::new(0, Comparator::Greater, 5.0, d).unwrap();
        assert!(gt.evaluate(&sample(0, &[5.1, 0.0, 0.0], &[])));
        assert!(!gt.evaluate(&sample(1, &[5.0, 0.0, 0.0], &[])));
        let le = RuleTrigger::new(2, Comparator::LessEq, -1.0, d).unwrap();
        assert!(le.evaluate(&sample(2, &[0.0, 0.0, -1.0], &[])));
    }

    #[test]
    fn rule_trigger_rejects_bad_index_at_construction() {
        assert!(matches!(
            RuleTrigger::new(3, Comparator::Greater, 0.0, 3),
            Err(Error::ConfigError(_))
        ));
    }

    #[test]
    fn semantic_trigger_modes() {
        let any = SemanticTrigger::new(
            ["rain".to_string()].into_iter().collect(),
            MatchMode::Any,
        )
        .unwrap();
        assert!(any.evaluate(&sample(0, &[0.0], &["night", "rain"])));

        let all = SemanticTrigger::new(
            ["rain".to_string()].into_iter().collect(),
            MatchMode::All,
        )
        .unwrap();
        assert!(!all.evaluate(&sample(1, &[0.0], &["day"])));

        let both = SemanticTrigger::new(
            ["night".to_string(), "rain".to_string()].into_iter().collect(),
            MatchMode::All,
        )
        .unwrap();
        assert!(both.evaluate(&sample(2, &[0.0], &["night", "rain"])));
        assert!(SemanticTrigger::new(BTreeSet::new(), MatchMode::Any).is_err());
    }

    #[test]
    fn error_trigger_residuals() {
        let mut t = ErrorTrigger::new(4, 0.5, 0, 1).unwrap();
        for v in [1.0, 1.0, 1.0, 1.0] {
            assert!(!t.evaluate(&sample(0, &[v], &[])), "warmup must be quiet");
        }
        // window now [1,1,1,1]; residual 0.1 stays quiet
        assert!(!t.evaluate(&sample(4, &[1.1], &[])));
        // window [1,1,1,1.1], mean 1.025; residual 0.975 fires
        assert!(t.evaluate(&sample(5, &[2.0], &[])));
    }

    #[test]
    fn error_trigger_quiet_before_window_fills() {
        let mut t = ErrorTrigger::new(3, 0.001, 0, 1).unwrap();
        assert!(!t.evaluate(&sample(0, &[0.0], &[])));
        assert!(!t.evaluate(&sample(1, &[100.0], &[])));
        assert!(!t.evaluate(&sample(2, &[-100.0], &[])));
        // window full from here on
        assert!(t.evaluate(&sample(3, &[50.0], &[])));
    }

    #[test]
    fn frozen_novelty_scores() {
        let mut t = FrozenNoveltyTrigger::new(1, 0.2).unwrap();
        assert_eq!(
            t.observe(&sample(0, &[1.0, 0.0], &[])).unwrap(),
            NoveltyObservation::Warmup
        );
        // identical to the reference
        match t.observe(&sample(1, &[1.0, 0.0], &[])).unwrap() {
            NoveltyObservation::Score(s) => assert_eq!(s, 0.0),
            _ => panic!("expected score"),
        }
        // orthogonal to every reference vector
        match t.observe(&sample(2, &[0.0, 1.0], &[])).unwrap() {
            NoveltyObservation::Score(s) => assert_eq!(s, 1.0),
            _ => panic!("expected score"),
        }
        // oracle: 1 - cos 45
        match t.observe(&sample(3, &[1.0, 1.0], &[])).unwrap() {
            NoveltyObservation::Score(s) => {
                assert!((s - 0.29289321881345254).abs() < 1e-12, "{s}")
            }
            _ => panic!("expected score"),
        }
    }

    #[test]
    fn frozen_novelty_reference_is_static() {
        // Feeding the same post-warmup stream must yield identical scores
        // no matter what the caller retained in between.
        let stream: Vec<Sample> = (0..20)
            .map(|i| sample(i, &[(i as f64).sin(), (i as f64).cos()], &[]))
            .collect();
        let mut a = FrozenNoveltyTrigger::new(5, 0.3).unwrap();
        let mut b = FrozenNoveltyTrigger::new(5, 0.3).unwrap();
        let scores_a: Vec<_> = stream.iter().map(|s| a.observe(s).unwrap()).collect();
        let scores_b: Vec<_> = stream.iter().map(|s| b.observe(s).unwrap()).collect();
        assert_eq!(scores_a, scores_b);
        assert_eq!(a.reference_len(), 5);
    }

    #[test]
    fn repeated_vector_retains_at_most_warmup() {
        let mut t = FrozenNoveltyTrigger::new(3, 0.1).unwrap();
        let mut retained = 0;
        for i in 0..100 {
            match t.observe(&sample(i, &[0.5, 0.5], &[])).unwrap() {
                NoveltyObservation::Warmup => retained += 1,
                NoveltyObservation::Score(s) => {
                    if t.retains(s) {
                        retained += 1;
                    }
                }
            }
        }
        assert_eq!(retained, 3);
    }
}
