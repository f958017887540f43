//! Experiment orchestration: config loading, strategy execution over one
//! shared stream, artifact persistence, and cross-strategy comparison.
//!
//! Every strategy in an experiment consumes the identical stream under the
//! identical retention budget, so metric differences are attributable to the
//! strategy alone. Runs are deterministic per seed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::{ClosedLoopEngine, DecisionRecord, EngineConfig};
use crate::error::{Error, Result};
use crate::formats::{self, DatasetMeta};
use crate::metrics::{evaluate_dataset, Provenance, QualityReport};
use crate::sample::Sample;
use crate::simgen::{self, StreamConfig};
use crate::state::DatasetStateEstimate;
use crate::target::{ObjectiveWeights, TagPredicate, TargetState};
use crate::triggers::{
    Comparator, ErrorTrigger, FrozenNoveltyTrigger, MatchMode, NoveltyObservation, RuleTrigger,
    SemanticTrigger,
};
use crate::value::{Decision, Reason, ReasonCode};

fn default_rate_gain() -> f64 {
    0.05
}

fn default_ema_alpha() -> f64 {
    0.01
}

fn default_step_budget() -> usize {
    1024
}

/// Engine tunables exposed in strategy config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineTuning {
    #[serde(default)]
    pub initial_threshold: f64,
    #[serde(default = "default_rate_gain")]
    pub rate_gain: f64,
    #[serde(default = "default_ema_alpha")]
    pub ema_alpha: f64,
    #[serde(default = "default_step_budget")]
    pub step_budget: usize,
    #[serde(default)]
    pub oracle_labeled: bool,
}

impl Default for EngineTuning {
    fn default() -> Self {
        Self {
            initial_threshold: 0.0,
            rate_gain: default_rate_gain(),
            ema_alpha: default_ema_alpha(),
            step_budget: default_step_budget(),
            oracle_labeled: false,
        }
    }
}

impl From<EngineTuning> for EngineConfig {
    fn from(t: EngineTuning) -> Self {
        EngineConfig {
            initial_threshold: t.initial_threshold,
            rate_gain: t.rate_gain,
            ema_alpha: t.ema_alpha,
            step_budget: t.step_budget,
            oracle_labeled: t.oracle_labeled,
        }
    }
}

/// The collection strategies an experiment can compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    /// Retain everything until the budget is full.
    RecordAll,
    /// Retain each sample independently with probability `p`.
    RandomP { p: f64 },
    /// Data-intrinsic rule trigger on one raw feature.
    Rule {
        feature_index: usize,
        comparator: Comparator,
        threshold: f64,
    },
    /// Data-intrinsic tag predicate.
    Semantic {
        required_tags: Vec<String>,
        mode: MatchMode,
    },
    /// Data-intrinsic expected-vs-observed residual trigger.
    Error {
        window_length: usize,
        residual_threshold: f64,
        monitored_index: usize,
    },
    /// Static novelty vs a warmup-frozen reference set.
    FrozenNovelty { warmup: usize, novelty_threshold: f64 },
    /// The feedback-driven engine.
    ClosedLoop {
        #[serde(flatten)]
        tuning: EngineTuning,
    },
}

/// One named strategy in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: StrategyKind,
}

fn name_is_safe(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-'))
}

fn default_relevance() -> TagPredicate {
    TagPredicate::Always
}

/// Target-state section of the experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    /// Explicit class distribution; uniform over the stream's classes when
    /// omitted.
    #[serde(default)]
    pub class_distribution: Option<Vec<f64>>,
    #[serde(default = "default_relevance")]
    pub relevance: TagPredicate,
    pub max_dataset_size: usize,
    pub target_accept_rate: f64,
    pub sketch_capacity: usize,
    #[serde(default)]
    pub weights: ObjectiveWeights,
}

impl TargetConfig {
    /// Build the target state; `num_classes_hint` comes from the stream
    /// config and backs the uniform default.
    pub fn build(&self, num_classes_hint: Option<usize>) -> Result<TargetState> {
        let class_distribution = match (&self.class_distribution, num_classes_hint) {
            (Some(d), _) => d.clone(),
            (None, Some(c)) if c > 0 => vec![1.0 / c as f64; c],
            _ => {
                return Err(Error::ConfigError(
                    "target.class_distribution is required when no stream config is present"
                        .into(),
                ));
            }
        };
        let t = TargetState {
            class_distribution,
            relevance: self.relevance.clone(),
            max_dataset_size: self.max_dataset_size,
            target_accept_rate: self.target_accept_rate,
            sketch_capacity: self.sketch_capacity,
            weights: self.weights,
        };
        t.validate()?;
        Ok(t)
    }
}

/// Full experiment description, loadable from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub stream: Option<StreamConfig>,
    #[serde(default)]
    pub stream_file: Option<PathBuf>,
    pub target: TargetConfig,
    #[serde(rename = "strategy", default)]
    pub strategies: Vec<StrategySpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.stream, &self.stream_file) {
            (None, None) => {
                return Err(Error::ConfigError(
                    "config needs a [stream] section or a stream_file path".into(),
                ));
            }
            (Some(_), Some(_)) => {
                return Err(Error::ConfigError(
                    "config has both [stream] and stream_file; pick one".into(),
                ));
            }
            _ => {}
        }
        if let Some(s) = &self.stream {
            s.validate()?;
        }
        if self.strategies.is_empty() {
            return Err(Error::ConfigError("no strategies configured".into()));
        }
        let mut seen = BTreeSet::new();
        for spec in &self.strategies {
            if !name_is_safe(&spec.name) {
                return Err(Error::ConfigError(format!(
                    "strategy name '{}' must be nonempty [A-Za-z0-9_-]",
                    spec.name
                )));
            }
            if !seen.insert(spec.name.clone()) {
                return Err(Error::ConfigError(format!(
                    "duplicate strategy name '{}'",
                    spec.name
                )));
            }
            if let StrategyKind::RandomP { p } = spec.kind {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::ConfigError(format!(
                        "strategy '{}': p must be in [0, 1]",
                        spec.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parse an experiment config file, with line/field diagnostics on failure.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let config: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

/// Short stable hash of the resolved experiment config.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let canonical =
        serde_json::to_vec(config).map_err(|e| Error::ConfigError(e.to_string()))?;
    let digest = Sha256::digest(&canonical);
    Ok(hex::encode(&digest[..8]))
}

/// Deterministic per-strategy seed derived from the experiment seed and the
/// strategy name.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(name.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Output of one strategy over one stream.
#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub name: String,
    pub dataset: Vec<Sample>,
    pub log: Vec<DecisionRecord>,
    /// Present for the closed loop only.
    pub final_state: Option<DatasetStateEstimate>,
    pub max_step_comparisons: usize,
}

/// A strategy that failed mid-stream, with partial artifacts for flushing.
#[derive(Debug)]
pub struct StrategyFailure {
    pub error: Error,
    pub partial: StrategyRun,
}

/// What a baseline decided about one sample, before budget enforcement.
/// Baselines do not compute value components; only the novelty scorer
/// fills the novelty/redundancy columns.
struct BaselineVerdict {
    wants_retention: bool,
    total: f64,
    threshold: f64,
    novelty_gain: f64,
    redundancy_penalty: f64,
    code: ReasonCode,
}

impl BaselineVerdict {
    fn fired(fired: bool, threshold: f64, yes: ReasonCode, no: ReasonCode) -> Self {
        Self {
            wants_retention: fired,
            total: fired as u8 as f64,
            threshold,
            novelty_gain: 0.0,
            redundancy_penalty: 0.0,
            code: if fired { yes } else { no },
        }
    }
}

/// Run one strategy over the shared stream.
pub fn run_strategy(
    spec: &StrategySpec,
    samples: &[Sample],
    target: &TargetState,
    dimension: usize,
    seed: u64,
) -> std::result::Result<StrategyRun, Box<StrategyFailure>> {
    let fail = |error: Error| {
        Box::new(StrategyFailure {
            error,
            partial: StrategyRun {
                name: spec.name.clone(),
                dataset: Vec::new(),
                log: Vec::new(),
                final_state: None,
                max_step_comparisons: 0,
            },
        })
    };

    if let StrategyKind::ClosedLoop { tuning } = &spec.kind {
        let engine = ClosedLoopEngine::new(target.clone(), EngineConfig::from(*tuning), seed)
            .map_err(&fail)?;
        return match engine.process_stream(samples.iter().cloned()) {
            Ok(out) => Ok(StrategyRun {
                name: spec.name.clone(),
                dataset: out.dataset,
                log: out.log,
                final_state: Some(out.final_state),
                max_step_comparisons: out.max_step_comparisons,
            }),
            Err(f) => Err(Box::new(StrategyFailure {
                error: f.error,
                partial: StrategyRun {
                    name: spec.name.clone(),
                    dataset: f.partial_dataset,
                    log: f.partial_log,
                    final_state: None,
                    max_step_comparisons: 0,
                },
            })),
        };
    }

    enum Baseline {
        RecordAll,
        Random { p: f64, rng: Box<ChaCha12Rng> },
        Rule(RuleTrigger),
        Semantic(SemanticTrigger),
        Error(ErrorTrigger),
        Frozen(FrozenNoveltyTrigger),
    }

    let mut baseline = match &spec.kind {
        StrategyKind::RecordAll => Baseline::RecordAll,
        StrategyKind::RandomP { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(fail(Error::ConfigError("p must be in [0, 1]".into())));
            }
            Baseline::Random {
                p: *p,
                rng: Box::new(ChaCha12Rng::seed_from_u64(seed)),
            }
        }
        StrategyKind::Rule {
            feature_index,
            comparator,
            threshold,
        } => Baseline::Rule(
            RuleTrigger::new(*feature_index, *comparator, *threshold, dimension).map_err(&fail)?,
        ),
        StrategyKind::Semantic {
            required_tags,
            mode,
        } => Baseline::Semantic(
            SemanticTrigger::new(required_tags.iter().cloned().collect(), *mode)
                .map_err(&fail)?,
        ),
        StrategyKind::Error {
            window_length,
            residual_threshold,
            monitored_index,
        } => Baseline::Error(
            ErrorTrigger::new(*window_length, *residual_threshold, *monitored_index, dimension)
                .map_err(&fail)?,
        ),
        StrategyKind::FrozenNovelty {
            warmup,
            novelty_threshold,
        } => Baseline::Frozen(
            FrozenNoveltyTrigger::new(*warmup, *novelty_threshold).map_err(&fail)?,
        ),
        StrategyKind::ClosedLoop { .. } => unreachable!("handled above"),
    };

    let mut dataset: Vec<Sample> = Vec::new();
    let mut log: Vec<DecisionRecord> = Vec::new();
    for (step, sample) in samples.iter().enumerate() {
        let budget_left = dataset.len() < target.max_dataset_size;
        let verdict = match &mut baseline {
            Baseline::RecordAll => BaselineVerdict {
                wants_retention: true,
                total: 1.0,
                threshold: 0.0,
                novelty_gain: 0.0,
                redundancy_penalty: 0.0,
                code: ReasonCode::RecordAll,
            },
            Baseline::Random { p, rng } => BaselineVerdict::fired(
                rng.gen::<f64>() < *p,
                *p,
                ReasonCode::RandomAccept,
                ReasonCode::RandomReject,
            ),
            Baseline::Rule(t) => BaselineVerdict::fired(
                t.evaluate(sample),
                0.5,
                ReasonCode::TriggerFired,
                ReasonCode::TriggerQuiet,
            ),
            Baseline::Semantic(t) => BaselineVerdict::fired(
                t.evaluate(sample),
                0.5,
                ReasonCode::TriggerFired,
                ReasonCode::TriggerQuiet,
            ),
            Baseline::Error(t) => BaselineVerdict::fired(
                t.evaluate(sample),
                0.5,
                ReasonCode::TriggerFired,
                ReasonCode::TriggerQuiet,
            ),
            Baseline::Frozen(t) => {
                let thr = t.novelty_threshold();
                match t.observe(sample) {
                    Ok(NoveltyObservation::Warmup) => BaselineVerdict {
                        wants_retention: true,
                        total: 1.0,
                        threshold: thr,
                        novelty_gain: 1.0,
                        redundancy_penalty: 0.0,
                        code: ReasonCode::Warmup,
                    },
                    Ok(NoveltyObservation::Score(nov)) => BaselineVerdict {
                        wants_retention: t.retains(nov),
                        total: nov,
                        threshold: thr,
                        novelty_gain: nov,
                        redundancy_penalty: 1.0 - nov,
                        code: if t.retains(nov) {
                            ReasonCode::TriggerFired
                        } else {
                            ReasonCode::TriggerQuiet
                        },
                    },
                    Err(error) => {
                        return Err(Box::new(StrategyFailure {
                            error,
                            partial: StrategyRun {
                                name: spec.name.clone(),
                                dataset,
                                log,
                                final_state: None,
                                max_step_comparisons: 0,
                            },
                        }));
                    }
                }
            }
        };
        let (decision, code) = if verdict.wants_retention && budget_left {
            (Decision::Retain, verdict.code)
        } else if verdict.wants_retention {
            (Decision::Discard, ReasonCode::BudgetFull)
        } else {
            (Decision::Discard, verdict.code)
        };
        if decision == Decision::Retain {
            dataset.push(sample.clone());
        }
        log.push(DecisionRecord {
            step: step as u64,
            sample_id: sample.id,
            balance_gain: 0.0,
            novelty_gain: verdict.novelty_gain,
            relevance_score: 0.0,
            redundancy_penalty: verdict.redundancy_penalty,
            total: verdict.total,
            threshold: verdict.threshold,
            decision,
            reason: Reason::new(code),
        });
    }

    Ok(StrategyRun {
        name: spec.name.clone(),
        dataset,
        log,
        final_state: None,
        max_step_comparisons: 0,
    })
}

/// Per-strategy row of the comparison summary, with competition ranks per
/// metric (rank 1 is best; ties share the better rank).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: String,
    pub dataset_size: usize,
    pub vendi_score: f64,
    pub rank_vendi: usize,
    pub balance_entropy: f64,
    pub rank_balance: usize,
    pub mean_max_similarity: f64,
    pub rank_similarity: usize,
    pub relevance_fraction: f64,
    pub rank_relevance: usize,
    /// Composite distance from the target: |balance - 1| + (1 - relevance)
    /// + mean max similarity. A harness ranking convention.
    pub target_gap: f64,
    pub rank_target_gap: usize,
}

/// Ranked cross-strategy comparison over one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(formats::SUMMARY_HEADER);
        out.push('\n');
        out.push_str(
            "strategy\tdataset_size\tvendi_score\trank_vendi\tbalance_entropy\trank_balance\t\
             mean_max_similarity\trank_similarity\trelevance_fraction\trank_relevance\t\
             target_gap\trank_target_gap\n",
        );
        for r in &self.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.strategy,
                r.dataset_size,
                r.vendi_score,
                r.rank_vendi,
                r.balance_entropy,
                r.rank_balance,
                r.mean_max_similarity,
                r.rank_similarity,
                r.relevance_fraction,
                r.rank_relevance,
                r.target_gap,
                r.rank_target_gap
            )
            .expect("string write");
        }
        out
    }
}

fn competition_ranks(values: &[f64], higher_is_better: bool) -> Vec<usize> {
    values
        .iter()
        .map(|&v| {
            1 + values
                .iter()
                .filter(|&&other| {
                    if higher_is_better {
                        other > v
                    } else {
                        other < v
                    }
                })
                .count()
        })
        .collect()
}

/// Rank strategy reports that were produced over the same stream.
pub fn compare_strategies(reports: &[QualityReport]) -> Result<Summary> {
    if reports.len() < 2 {
        return Err(Error::ComparisonError(format!(
            "need at least 2 reports, got {}",
            reports.len()
        )));
    }
    let first_hash = &reports[0].stream_hash;
    for r in reports {
        if &r.stream_hash != first_hash {
            return Err(Error::ComparisonError(format!(
                "report '{}' describes stream {} but '{}' describes {}",
                r.strategy, r.stream_hash, reports[0].strategy, first_hash
            )));
        }
    }

    let vendi: Vec<f64> = reports.iter().map(|r| r.vendi_score).collect();
    let balance: Vec<f64> = reports.iter().map(|r| r.balance_entropy).collect();
    let mean_max: Vec<f64> = reports.iter().map(|r| r.mean_max_similarity).collect();
    let relevance: Vec<f64> = reports.iter().map(|r| r.relevance_fraction).collect();
    let gap: Vec<f64> = reports
        .iter()
        .map(|r| (r.balance_entropy - 1.0).abs() + (1.0 - r.relevance_fraction) + r.mean_max_similarity)
        .collect();

    let rank_vendi = competition_ranks(&vendi, true);
    let rank_balance = competition_ranks(&balance, true);
    let rank_similarity = competition_ranks(&mean_max, false);
    let rank_relevance = competition_ranks(&relevance, true);
    let rank_gap = competition_ranks(&gap, false);

    let mut rows: Vec<SummaryRow> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| SummaryRow {
            strategy: r.strategy.clone(),
            dataset_size: r.dataset_size,
            vendi_score: vendi[i],
            rank_vendi: rank_vendi[i],
            balance_entropy: balance[i],
            rank_balance: rank_balance[i],
            mean_max_similarity: mean_max[i],
            rank_similarity: rank_similarity[i],
            relevance_fraction: relevance[i],
            rank_relevance: rank_relevance[i],
            target_gap: gap[i],
            rank_target_gap: rank_gap[i],
        })
        .collect();
    rows.sort_by(|a, b| {
        a.rank_target_gap
            .cmp(&b.rank_target_gap)
            .then_with(|| a.strategy.cmp(&b.strategy))
    });
    Ok(Summary { rows })
}

/// Seed/output overrides passed on the command line or environment.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub stream_file: Option<PathBuf>,
}

/// Everything a finished experiment produced.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    pub stream_hash: String,
    pub reports: Vec<QualityReport>,
    pub summary: Summary,
    pub summary_path: PathBuf,
}

fn resolve_stream(
    config: &ExperimentConfig,
) -> Result<(Vec<Sample>, usize, usize)> {
    match (&config.stream, &config.stream_file) {
        (Some(stream_cfg), None) => {
            let samples = simgen::generate(stream_cfg, config.seed)?;
            Ok((samples, stream_cfg.dimension, stream_cfg.num_classes))
        }
        (None, Some(path)) => {
            let (meta, samples) = formats::read_stream(path)?;
            Ok((samples, meta.config.dimension, meta.config.num_classes))
        }
        _ => Err(Error::ConfigError(
            "config needs exactly one of [stream] and stream_file".into(),
        )),
    }
}

/// Run every strategy in the config over the shared stream, write
/// per-strategy artifacts and the comparison summary, and return the
/// reports. On an engine failure the partial decision log is flushed before
/// the error propagates; no summary is written.
pub fn run_experiment(
    mut config: ExperimentConfig,
    overrides: &RunOverrides,
) -> Result<ExperimentOutcome> {
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(dir) = &overrides.out_dir {
        config.out_dir = Some(dir.clone());
    }
    if let Some(stream_file) = &overrides.stream_file {
        config.stream = None;
        config.stream_file = Some(stream_file.clone());
    }
    config.validate()?;
    let out_dir = config
        .out_dir
        .clone()
        .ok_or_else(|| Error::ConfigError("no output directory (config out_dir or --out)".into()))?;
    fs::create_dir_all(&out_dir)?;

    let cfg_hash = config_hash(&config)?;
    let (samples, dimension, num_classes) = resolve_stream(&config)?;
    let stream_hash = formats::stream_hash(&samples)?;
    let target = config.target.build(Some(num_classes))?;

    let mut reports = Vec::new();
    for spec in &config.strategies {
        let strategy_seed = derive_seed(config.seed, &spec.name);
        let run = match run_strategy(spec, &samples, &target, dimension, strategy_seed) {
            Ok(run) => run,
            Err(failure) => {
                // flush what we have, then abort without a summary
                let log_path = out_dir.join(format!("{}.log.txt", spec.name));
                formats::write_log(&log_path, &spec.name, &failure.partial.log)?;
                return Err(failure.error);
            }
        };
        let dataset_path = out_dir.join(format!("{}.dataset.txt", run.name));
        formats::write_dataset(
            &dataset_path,
            &DatasetMeta {
                strategy: run.name.clone(),
                config_hash: cfg_hash.clone(),
                stream_sha256: stream_hash.clone(),
            },
            &run.dataset,
        )?;
        formats::write_log(
            &out_dir.join(format!("{}.log.txt", run.name)),
            &run.name,
            &run.log,
        )?;
        let report = evaluate_dataset(
            &run.dataset,
            &target,
            &Provenance {
                seed: config.seed,
                config_hash: cfg_hash.clone(),
                strategy: run.name.clone(),
                stream_hash: stream_hash.clone(),
            },
        )?;
        formats::write_report(&out_dir.join(format!("{}.report.txt", run.name)), &report)?;
        reports.push(report);
    }

    let summary = compare_strategies(&reports)?;
    let summary_path = out_dir.join("summary.tsv");
    fs::write(&summary_path, summary.to_text())?;

    Ok(ExperimentOutcome {
        out_dir,
        stream_hash,
        reports,
        summary,
        summary_path,
    })
}

/// Generate the configured stream and write it as a replayable file.
pub fn generate_stream_file(
    config: &ExperimentConfig,
    path: &Path,
) -> Result<(usize, String)> {
    let stream_cfg = config.stream.as_ref().ok_or_else(|| {
        Error::ConfigError("generate needs a [stream] section in the config".into())
    })?;
    let samples = simgen::generate(stream_cfg, config.seed)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let hash = formats::write_stream(path, stream_cfg, &samples)?;
    Ok((samples.len(), hash))
}

/// Evaluate an existing dataset file against the config's target state.
pub fn score_dataset_file(
    dataset_path: &Path,
    config: &ExperimentConfig,
) -> Result<QualityReport> {
    let (meta, samples) = formats::read_dataset(dataset_path)?;
    let target = config
        .target
        .build(config.stream.as_ref().map(|s| s.num_classes))?;
    evaluate_dataset(
        &samples,
        &target,
        &Provenance {
            seed: config.seed,
            config_hash: config_hash(config)?,
            strategy: meta.strategy,
            stream_hash: meta.stream_sha256,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    const CONFIG: &str = r#"
seed = 42
out_dir = "unused"

[stream]
num_classes = 3
dimension = 8
zipf_exponent = 1.0
cluster_noise_sigma = 0.05
length = 300
relevant_classes = [0, 1]

[stream.tag_rules]
0 = ["urban"]
2 = ["rural", "dusk"]

[target]
max_dataset_size = 50
target_accept_rate = 0.2
sketch_capacity = 16
relevance = { has = "relevant" }
weights = { balance = 1.0, novelty = 0.5, relevance = 1.0, redundancy = 0.25 }

[[strategy]]
name = "record_all"
kind = "record_all"

[[strategy]]
name = "random"
kind = "random_p"
p = 0.2

[[strategy]]
name = "rule"
kind = "rule"
feature_index = 0
comparator = ">"
threshold = 0.1

[[strategy]]
name = "semantic"
kind = "semantic"
required_tags = ["urban"]
mode = "any"

[[strategy]]
name = "error_watch"
kind = "error"
window_length = 5
residual_threshold = 0.4
monitored_index = 1

[[strategy]]
name = "frozen"
kind = "frozen_novelty"
warmup = 10
novelty_threshold = 0.3

[[strategy]]
name = "closed_loop"
kind = "closed_loop"
initial_threshold = 0.0
step_budget = 8
"#;

    fn parsed() -> ExperimentConfig {
        let config: ExperimentConfig = toml::from_str(CONFIG).unwrap();
        config.validate().unwrap();
        config
    }

    #[test]
    fn toml_config_parses_every_strategy_kind() {
        let config = parsed();
        assert_eq!(config.strategies.len(), 7);
        assert_eq!(
            config.strategies[2].kind,
            StrategyKind::Rule {
                feature_index: 0,
                comparator: Comparator::Greater,
                threshold: 0.1
            }
        );
        match &config.strategies[6].kind {
            StrategyKind::ClosedLoop { tuning } => {
                assert_eq!(tuning.step_budget, 8);
                assert_eq!(tuning.rate_gain, 0.05);
                assert!(!tuning.oracle_labeled);
            }
            other => panic!("expected closed loop, got {other:?}"),
        }
        let stream = config.stream.as_ref().unwrap();
        assert_eq!(
            stream.tag_rules,
            BTreeMap::from([
                (0, vec!["urban".to_string()]),
                (2, vec!["rural".to_string(), "dusk".to_string()])
            ])
        );
        assert_eq!(
            config.target.relevance,
            TagPredicate::Has("relevant".into())
        );
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = parsed();
        c.strategies[1].name = "record_all".into();
        assert!(matches!(c.validate(), Err(Error::ConfigError(_))));

        let mut c = parsed();
        c.strategies[0].name = "has space".into();
        assert!(c.validate().is_err());

        let mut c = parsed();
        c.stream = None;
        assert!(c.validate().is_err());

        let mut c = parsed();
        c.strategies.clear();
        assert!(c.validate().is_err());

        let mut c = parsed();
        c.strategies[1].kind = StrategyKind::RandomP { p: 1.5 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn seed_derivation_is_stable_and_name_dependent() {
        let a = derive_seed(42, "closed_loop");
        let b = derive_seed(42, "closed_loop");
        let c = derive_seed(42, "random");
        let d = derive_seed(43, "closed_loop");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = config_hash(&parsed()).unwrap();
        let mut changed = parsed();
        changed.seed = 43;
        let b = config_hash(&changed).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn run_experiment_produces_artifacts_and_identical_reruns() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = parsed();
        config.out_dir = Some(dir.path().join("run1"));
        let out1 = run_experiment(config.clone(), &RunOverrides::default()).unwrap();
        assert_eq!(out1.reports.len(), 7);
        for spec in &config.strategies {
            for suffix in ["dataset.txt", "log.txt", "report.txt"] {
                let p = out1.out_dir.join(format!("{}.{suffix}", spec.name));
                assert!(p.exists(), "missing {}", p.display());
            }
        }
        let text1 = fs::read_to_string(&out1.summary_path).unwrap();

        config.out_dir = Some(dir.path().join("run2"));
        let out2 = run_experiment(config, &RunOverrides::default()).unwrap();
        let text2 = fs::read_to_string(&out2.summary_path).unwrap();
        assert_eq!(text1, text2, "same seed must give identical summaries");
    }

    #[test]
    fn record_all_with_big_budget_keeps_everything() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = parsed();
        config.target.max_dataset_size = 10_000;
        config.strategies = vec![
            StrategySpec {
                name: "record_all".into(),
                kind: StrategyKind::RecordAll,
            },
            StrategySpec {
                name: "random".into(),
                kind: StrategyKind::RandomP { p: 0.5 },
            },
        ];
        config.out_dir = Some(dir.path().to_path_buf());
        let out = run_experiment(config, &RunOverrides::default()).unwrap();
        let record_all = &out.reports[0];
        assert_eq!(record_all.dataset_size, 300);
        // the stream's true relevant fraction: classes 0 and 1 are tagged
        let (_, samples) = {
            let c = parsed();
            let s = simgen::generate(c.stream.as_ref().unwrap(), c.seed).unwrap();
            ((), s)
        };
        let truth = samples
            .iter()
            .filter(|s| s.label == 0 || s.label == 1)
            .count() as f64
            / samples.len() as f64;
        assert!((record_all.relevance_fraction - truth).abs() < 1e-12);
    }

    #[test]
    fn random_p_retained_count_within_binomial_bounds() {
        // p = budget/length puts the binomial mean at the budget; with the
        // hard cap the count must land in [mean - 3 sigma, budget].
        let stream_cfg = StreamConfig {
            num_classes: 3,
            dimension: 4,
            zipf_exponent: 1.0,
            cluster_noise_sigma: 0.05,
            length: 2000,
            drift: None,
            tag_rules: BTreeMap::new(),
            relevant_classes: vec![],
            centers: None,
            seed: Some(9),
        };
        let samples = simgen::generate(&stream_cfg, 0).unwrap();
        let n_max = 200usize;
        let p = n_max as f64 / samples.len() as f64;
        let target = TargetConfig {
            class_distribution: None,
            relevance: TagPredicate::Always,
            max_dataset_size: n_max,
            target_accept_rate: 0.5,
            sketch_capacity: 8,
            weights: ObjectiveWeights::default(),
        }
        .build(Some(3))
        .unwrap();
        let spec = StrategySpec {
            name: "random".into(),
            kind: StrategyKind::RandomP { p },
        };
        let run = run_strategy(&spec, &samples, &target, 4, 77).unwrap();
        let sigma = (samples.len() as f64 * p * (1.0 - p)).sqrt();
        let lo = (n_max as f64 - 3.0 * sigma).floor() as usize;
        assert!(
            run.dataset.len() >= lo && run.dataset.len() <= n_max,
            "retained {} outside [{lo}, {n_max}]",
            run.dataset.len()
        );
    }

    #[test]
    fn compare_rejects_mismatched_streams_and_ties_rank_one() {
        let mk = |strategy: &str, hash: &str| QualityReport {
            schema_version: 1,
            dataset_size: 10,
            vendi_score: 2.0,
            balance_entropy: 0.5,
            mean_max_similarity: 0.5,
            relevance_fraction: 0.5,
            class_counts: vec![5, 5],
            eval_sample_size: 10,
            flags: vec![],
            seed: 1,
            config_hash: "c".into(),
            strategy: strategy.into(),
            stream_hash: hash.into(),
        };
        assert!(matches!(
            compare_strategies(&[mk("a", "h1"), mk("b", "h2")]),
            Err(Error::ComparisonError(_))
        ));
        assert!(compare_strategies(&[mk("a", "h1")]).is_err());

        let summary = compare_strategies(&[mk("a", "h"), mk("b", "h"), mk("c", "h")]).unwrap();
        for row in &summary.rows {
            assert_eq!(row.rank_vendi, 1);
            assert_eq!(row.rank_balance, 1);
            assert_eq!(row.rank_similarity, 1);
            assert_eq!(row.rank_relevance, 1);
            assert_eq!(row.rank_target_gap, 1);
        }
    }

    #[test]
    fn dominant_strategy_ranks_first_everywhere() {
        let mk = |strategy: &str, v: f64, b: f64, m: f64, r: f64| QualityReport {
            schema_version: 1,
            dataset_size: 10,
            vendi_score: v,
            balance_entropy: b,
            mean_max_similarity: m,
            relevance_fraction: r,
            class_counts: vec![5, 5],
            eval_sample_size: 10,
            flags: vec![],
            seed: 1,
            config_hash: "c".into(),
            strategy: strategy.into(),
            stream_hash: "h".into(),
        };
        let summary = compare_strategies(&[
            mk("worse", 2.0, 0.6, 0.9, 0.4),
            mk("better", 5.0, 0.99, 0.2, 1.0),
        ])
        .unwrap();
        let best = summary.rows.iter().find(|r| r.strategy == "better").unwrap();
        assert_eq!(
            (
                best.rank_vendi,
                best.rank_balance,
                best.rank_similarity,
                best.rank_relevance,
                best.rank_target_gap
            ),
            (1, 1, 1, 1, 1)
        );
        assert_eq!(summary.rows[0].strategy, "better");
    }

    #[test]
    fn score_matches_run_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = parsed();
        config.out_dir = Some(dir.path().to_path_buf());
        let out = run_experiment(config.clone(), &RunOverrides::default()).unwrap();
        let report = score_dataset_file(&dir.path().join("closed_loop.dataset.txt"), &config)
            .unwrap();
        let original = out
            .reports
            .iter()
            .find(|r| r.strategy == "closed_loop")
            .unwrap();
        assert_eq!(report.vendi_score, original.vendi_score);
        assert_eq!(report.balance_entropy, original.balance_entropy);
        assert_eq!(report.class_counts, original.class_counts);
    }
}
