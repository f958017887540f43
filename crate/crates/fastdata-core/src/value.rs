//! Per-sample value scores and the retain/discard actions derived from them.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::target::ObjectiveWeights;

/// Binary collection decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Retain,
    Discard,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Retain => "retain",
            Decision::Discard => "discard",
        })
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "retain" => Ok(Decision::Retain),
            "discard" => Ok(Decision::Discard),
            other => Err(Error::ConfigError(format!("unknown decision '{other}'"))),
        }
    }
}

/// Machine-readable code explaining how a score or decision came about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReasonCode {
    /// Value computed, no decision attached yet.
    Scored,
    /// Retained: total met the threshold in force.
    AboveThreshold,
    /// Discarded: total fell short of the threshold.
    BelowThreshold,
    /// Discarded: the dataset budget is exhausted.
    BudgetFull,
    /// Retained unconditionally to build a warmup reference.
    Warmup,
    TriggerFired,
    TriggerQuiet,
    RandomAccept,
    RandomReject,
    RecordAll,
}

impl ReasonCode {
    fn as_str(self) -> &'static str {
        match self {
            ReasonCode::Scored => "scored",
            ReasonCode::AboveThreshold => "above_threshold",
            ReasonCode::BelowThreshold => "below_threshold",
            ReasonCode::BudgetFull => "budget_full",
            ReasonCode::Warmup => "warmup",
            ReasonCode::TriggerFired => "trigger_fired",
            ReasonCode::TriggerQuiet => "trigger_quiet",
            ReasonCode::RandomAccept => "random_accept",
            ReasonCode::RandomReject => "random_reject",
            ReasonCode::RecordAll => "record_all",
        }
    }

    fn parse(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "scored" => ReasonCode::Scored,
            "above_threshold" => ReasonCode::AboveThreshold,
            "below_threshold" => ReasonCode::BelowThreshold,
            "budget_full" => ReasonCode::BudgetFull,
            "warmup" => ReasonCode::Warmup,
            "trigger_fired" => ReasonCode::TriggerFired,
            "trigger_quiet" => ReasonCode::TriggerQuiet,
            "random_accept" => ReasonCode::RandomAccept,
            "random_reject" => ReasonCode::RandomReject,
            "record_all" => ReasonCode::RecordAll,
            other => {
                return Err(Error::ConfigError(format!("unknown reason '{other}'")));
            }
        })
    }
}

/// Reason code plus a flag noting that the sketch comparison ran on a
/// seeded subsample because the sketch exceeded the per-sample compute
/// budget. Serialized as `code` or `code+subsampled`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reason {
    pub code: ReasonCode,
    pub subsampled: bool,
}

impl Reason {
    pub fn new(code: ReasonCode) -> Self {
        Self {
            code,
            subsampled: false,
        }
    }

    pub fn with_code(self, code: ReasonCode) -> Self {
        Self { code, ..self }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.subsampled {
            write!(f, "{}+subsampled", self.code.as_str())
        } else {
            f.write_str(self.code.as_str())
        }
    }
}

impl FromStr for Reason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (code, subsampled) = match s.strip_suffix("+subsampled") {
            Some(base) => (base, true),
            None => (s, false),
        };
        Ok(Reason {
            code: ReasonCode::parse(code)?,
            subsampled,
        })
    }
}

/// Decomposed utility of one offered sample.
///
/// `total` is always the weighted sum of the components, computed once at
/// construction in a fixed operation order, so identical inputs give
/// bitwise-identical totals.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueScore {
    pub total: f64,
    pub balance_gain: f64,
    pub novelty_gain: f64,
    pub relevance_score: f64,
    pub redundancy_penalty: f64,
    pub reason: Reason,
}

impl ValueScore {
    /// Combine components under the given weights.
    pub fn from_components(
        weights: &ObjectiveWeights,
        balance_gain: f64,
        novelty_gain: f64,
        relevance_score: f64,
        redundancy_penalty: f64,
        reason: Reason,
    ) -> Self {
        let total = weights.balance * balance_gain
            + weights.novelty * novelty_gain
            + weights.relevance * relevance_score
            - weights.redundancy * redundancy_penalty;
        Self {
            total,
            balance_gain,
            novelty_gain,
            relevance_score,
            redundancy_penalty,
            reason,
        }
    }
}

/// The decision taken for one sample together with the score behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionAction {
    pub decision: Decision,
    pub value: ValueScore,
}
