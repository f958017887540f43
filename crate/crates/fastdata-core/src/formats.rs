//! On-disk formats: stream files, dataset files, decision logs, and quality
//! reports, all schema-versioned delimited text.
//!
//! Floats are written with the shortest representation that parses back to
//! the identical bits, so every file round-trips exactly and replay is
//! bit-exact across platforms.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::controller::DecisionRecord;
use crate::error::{Error, Result};
use crate::feature::FeatureVector;
use crate::metrics::QualityReport;
use crate::sample::Sample;
use crate::simgen::StreamConfig;

pub const STREAM_HEADER: &str = "#fastdata-stream v1";
pub const DATASET_HEADER: &str = "#fastdata-dataset v1";
pub const LOG_HEADER: &str = "#fastdata-log v1";
pub const REPORT_HEADER: &str = "#fastdata-report v1";
pub const SUMMARY_HEADER: &str = "#fastdata-summary v1";

const RECORD_COLUMNS: &str = "id,label,tags,features";
const LOG_COLUMNS: &str = "step,id,balance_gain,novelty_gain,relevance_score,\
redundancy_penalty,total,threshold,decision,reason";

/// Tags must survive the record syntax unescaped.
pub fn tag_is_safe(tag: &str) -> bool {
    !tag.is_empty()
        && tag
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} '{s}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite {what} '{s}'")));
    }
    Ok(v)
}

fn parse_u64(s: &str, line: usize, what: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| parse_err(line, format!("bad {what} '{s}'")))
}

// ---------------------------------------------------------------------------
// sample records (shared by stream and dataset files)
// ---------------------------------------------------------------------------

fn sample_line(sample: &Sample) -> Result<String> {
    for tag in &sample.tags {
        if !tag_is_safe(tag) {
            return Err(Error::ConfigError(format!(
                "tag '{tag}' contains characters unsafe for record files"
            )));
        }
    }
    let tags = sample
        .tags
        .iter()
        .cloned()
        .collect::<Vec<_>>()
        .join("|");
    let mut features = String::new();
    for (i, v) in sample.features.values().iter().enumerate() {
        if i > 0 {
            features.push(' ');
        }
        write!(features, "{v}").expect("string write");
    }
    Ok(format!("{},{},{},{}", sample.id, sample.label, tags, features))
}

fn parse_sample_line(line: &str, lineno: usize) -> Result<Sample> {
    let mut parts = line.splitn(4, ',');
    let id = parse_u64(
        parts.next().ok_or_else(|| parse_err(lineno, "missing id"))?,
        lineno,
        "id",
    )?;
    let label = parse_u64(
        parts
            .next()
            .ok_or_else(|| parse_err(lineno, "missing label"))?,
        lineno,
        "label",
    )? as usize;
    let tags_field = parts
        .next()
        .ok_or_else(|| parse_err(lineno, "missing tags"))?;
    let features_field = parts
        .next()
        .ok_or_else(|| parse_err(lineno, "missing features"))?;
    let tags: BTreeSet<String> = if tags_field.is_empty() {
        BTreeSet::new()
    } else {
        tags_field.split('|').map(str::to_string).collect()
    };
    let mut values = Vec::new();
    for tok in features_field.split(' ') {
        values.push(parse_f64(tok, lineno, "feature")?);
    }
    Ok(Sample::new(id, FeatureVector::new(values), tags, label, id))
}

/// Hash of a sample sequence's canonical record lines. Streams loaded from
/// file and streams generated in memory hash identically.
pub fn stream_hash(samples: &[Sample]) -> Result<String> {
    let mut hasher = Sha256::new();
    for s in samples {
        hasher.update(sample_line(s)?);
        hasher.update(b"\n");
    }
    Ok(hex::encode(hasher.finalize()))
}

// ---------------------------------------------------------------------------
// stream files
// ---------------------------------------------------------------------------

/// Header metadata of a stream file.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamMeta {
    pub config: StreamConfig,
    pub sha256: String,
}

pub fn write_stream(path: &Path, config: &StreamConfig, samples: &[Sample]) -> Result<String> {
    let hash = stream_hash(samples)?;
    let config_json =
        serde_json::to_string(config).map_err(|e| Error::ConfigError(e.to_string()))?;
    let mut out = String::new();
    out.push_str(STREAM_HEADER);
    out.push('\n');
    writeln!(out, "#config {config_json}").expect("string write");
    writeln!(out, "#sha256 {hash}").expect("string write");
    out.push_str(RECORD_COLUMNS);
    out.push('\n');
    for s in samples {
        out.push_str(&sample_line(s)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(hash)
}

pub fn read_stream(path: &Path) -> Result<(StreamMeta, Vec<Sample>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if first != STREAM_HEADER {
        return Err(parse_err(1, format!("expected '{STREAM_HEADER}'")));
    }
    let (_, config_line) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing #config line"))?;
    let config_json = config_line
        .strip_prefix("#config ")
        .ok_or_else(|| parse_err(2, "missing #config line"))?;
    let config: StreamConfig = serde_json::from_str(config_json)
        .map_err(|e| parse_err(2, format!("bad stream config: {e}")))?;
    config.validate()?;
    let (_, hash_line) = lines
        .next()
        .ok_or_else(|| parse_err(3, "missing #sha256 line"))?;
    let declared = hash_line
        .strip_prefix("#sha256 ")
        .ok_or_else(|| parse_err(3, "missing #sha256 line"))?
        .to_string();
    let (_, cols) = lines
        .next()
        .ok_or_else(|| parse_err(4, "missing column header"))?;
    if cols != RECORD_COLUMNS {
        return Err(parse_err(4, format!("expected columns '{RECORD_COLUMNS}'")));
    }

    let mut samples = Vec::new();
    let mut last_id: Option<u64> = None;
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let s = parse_sample_line(line, lineno)?;
        if s.features.len() != config.dimension {
            return Err(parse_err(
                lineno,
                format!(
                    "feature dimension {} does not match config {}",
                    s.features.len(),
                    config.dimension
                ),
            ));
        }
        if s.label >= config.num_classes {
            return Err(parse_err(
                lineno,
                format!("label {} outside 0..{}", s.label, config.num_classes),
            ));
        }
        if let Some(prev) = last_id {
            if s.id <= prev {
                return Err(parse_err(lineno, "ids must be strictly increasing"));
            }
        }
        last_id = Some(s.id);
        samples.push(s);
    }

    let actual = stream_hash(&samples)?;
    if actual != declared {
        return Err(parse_err(
            3,
            format!("stream hash mismatch: header {declared}, records {actual}"),
        ));
    }
    Ok((
        StreamMeta {
            config,
            sha256: declared,
        },
        samples,
    ))
}

// ---------------------------------------------------------------------------
// dataset files
// ---------------------------------------------------------------------------

/// Header metadata of a retained-dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub strategy: String,
    pub config_hash: String,
    pub stream_sha256: String,
}

pub fn write_dataset(path: &Path, meta: &DatasetMeta, samples: &[Sample]) -> Result<()> {
    let mut out = String::new();
    out.push_str(DATASET_HEADER);
    out.push('\n');
    writeln!(out, "#strategy {}", meta.strategy).expect("string write");
    writeln!(out, "#config_hash {}", meta.config_hash).expect("string write");
    writeln!(out, "#stream_sha256 {}", meta.stream_sha256).expect("string write");
    out.push_str(RECORD_COLUMNS);
    out.push('\n');
    for s in samples {
        out.push_str(&sample_line(s)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<(DatasetMeta, Vec<Sample>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if first != DATASET_HEADER {
        return Err(parse_err(1, format!("expected '{DATASET_HEADER}'")));
    }
    let mut strategy = None;
    let mut config_hash = None;
    let mut stream_sha = None;
    let mut samples = Vec::new();
    let mut seen_columns = false;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if let Some(rest) = line.strip_prefix("#strategy ") {
            strategy = Some(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("#config_hash ") {
            config_hash = Some(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("#stream_sha256 ") {
            stream_sha = Some(rest.to_string());
        } else if line == RECORD_COLUMNS {
            seen_columns = true;
        } else if line.is_empty() {
            continue;
        } else {
            if !seen_columns {
                return Err(parse_err(lineno, "record before column header"));
            }
            samples.push(parse_sample_line(line, lineno)?);
        }
    }
    Ok((
        DatasetMeta {
            strategy: strategy.ok_or_else(|| parse_err(1, "missing #strategy"))?,
            config_hash: config_hash.ok_or_else(|| parse_err(1, "missing #config_hash"))?,
            stream_sha256: stream_sha.ok_or_else(|| parse_err(1, "missing #stream_sha256"))?,
        },
        samples,
    ))
}

// ---------------------------------------------------------------------------
// decision logs
// ---------------------------------------------------------------------------

fn log_line(r: &DecisionRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.step,
        r.sample_id,
        r.balance_gain,
        r.novelty_gain,
        r.relevance_score,
        r.redundancy_penalty,
        r.total,
        r.threshold,
        r.decision,
        r.reason
    )
}

fn parse_log_line(line: &str, lineno: usize) -> Result<DecisionRecord> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != 10 {
        return Err(parse_err(
            lineno,
            format!("expected 10 fields, got {}", parts.len()),
        ));
    }
    Ok(DecisionRecord {
        step: parse_u64(parts[0], lineno, "step")?,
        sample_id: parse_u64(parts[1], lineno, "sample id")?,
        balance_gain: parse_f64(parts[2], lineno, "balance_gain")?,
        novelty_gain: parse_f64(parts[3], lineno, "novelty_gain")?,
        relevance_score: parse_f64(parts[4], lineno, "relevance_score")?,
        redundancy_penalty: parse_f64(parts[5], lineno, "redundancy_penalty")?,
        total: parse_f64(parts[6], lineno, "total")?,
        threshold: parse_f64(parts[7], lineno, "threshold")?,
        decision: parts[8]
            .parse()
            .map_err(|e| parse_err(lineno, format!("{e}")))?,
        reason: parts[9]
            .parse()
            .map_err(|e| parse_err(lineno, format!("{e}")))?,
    })
}

pub fn write_log(path: &Path, strategy: &str, records: &[DecisionRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(LOG_HEADER);
    out.push('\n');
    writeln!(out, "#strategy {strategy}").expect("string write");
    out.push_str(LOG_COLUMNS);
    out.push('\n');
    for r in records {
        out.push_str(&log_line(r));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<(String, Vec<DecisionRecord>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if first != LOG_HEADER {
        return Err(parse_err(1, format!("expected '{LOG_HEADER}'")));
    }
    let (_, strat_line) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing #strategy"))?;
    let strategy = strat_line
        .strip_prefix("#strategy ")
        .ok_or_else(|| parse_err(2, "missing #strategy"))?
        .to_string();
    let (_, cols) = lines
        .next()
        .ok_or_else(|| parse_err(3, "missing column header"))?;
    if cols != LOG_COLUMNS {
        return Err(parse_err(3, "unexpected log columns"));
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        records.push(parse_log_line(line, idx + 1)?);
    }
    Ok((strategy, records))
}

// ---------------------------------------------------------------------------
// quality reports
// ---------------------------------------------------------------------------

fn quoted(s: &str) -> String {
    format!("\"{s}\"")
}

fn unquote(s: &str, lineno: usize) -> Result<String> {
    s.strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .map(str::to_string)
        .ok_or_else(|| parse_err(lineno, format!("expected quoted string, got {s}")))
}

/// Serialize a report as a flat key-value document.
pub fn report_to_string(r: &QualityReport) -> String {
    let counts = r
        .class_counts
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    let flags = r
        .flags
        .iter()
        .map(|f| quoted(f))
        .collect::<Vec<_>>()
        .join(", ");
    let mut out = String::new();
    out.push_str(REPORT_HEADER);
    out.push('\n');
    writeln!(out, "schema_version = {}", r.schema_version).expect("string write");
    writeln!(out, "dataset_size = {}", r.dataset_size).expect("string write");
    writeln!(out, "vendi_score = {}", r.vendi_score).expect("string write");
    writeln!(out, "balance_entropy = {}", r.balance_entropy).expect("string write");
    writeln!(out, "mean_max_similarity = {}", r.mean_max_similarity).expect("string write");
    writeln!(out, "relevance_fraction = {}", r.relevance_fraction).expect("string write");
    writeln!(out, "class_counts = [{counts}]").expect("string write");
    writeln!(out, "eval_sample_size = {}", r.eval_sample_size).expect("string write");
    writeln!(out, "flags = [{flags}]").expect("string write");
    writeln!(out, "seed = {}", r.seed).expect("string write");
    writeln!(out, "config_hash = {}", quoted(&r.config_hash)).expect("string write");
    writeln!(out, "strategy = {}", quoted(&r.strategy)).expect("string write");
    writeln!(out, "stream_hash = {}", quoted(&r.stream_hash)).expect("string write");
    out
}

pub fn write_report(path: &Path, r: &QualityReport) -> Result<()> {
    fs::write(path, report_to_string(r))?;
    Ok(())
}

pub fn report_from_string(text: &str) -> Result<QualityReport> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty report"))?;
    if first != REPORT_HEADER {
        return Err(parse_err(1, format!("expected '{REPORT_HEADER}'")));
    }

    let mut schema_version = None;
    let mut dataset_size = None;
    let mut vendi_score = None;
    let mut balance_entropy = None;
    let mut mean_max_similarity = None;
    let mut relevance_fraction = None;
    let mut class_counts = None;
    let mut eval_sample_size = None;
    let mut flags = None;
    let mut seed = None;
    let mut config_hash = None;
    let mut strategy = None;
    let mut stream_hash = None;

    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (key, value) = line
            .split_once(" = ")
            .ok_or_else(|| parse_err(lineno, "expected 'key = value'"))?;
        match key {
            "schema_version" => schema_version = Some(parse_u64(value, lineno, key)? as u32),
            "dataset_size" => dataset_size = Some(parse_u64(value, lineno, key)? as usize),
            "vendi_score" => vendi_score = Some(parse_f64(value, lineno, key)?),
            "balance_entropy" => balance_entropy = Some(parse_f64(value, lineno, key)?),
            "mean_max_similarity" => mean_max_similarity = Some(parse_f64(value, lineno, key)?),
            "relevance_fraction" => relevance_fraction = Some(parse_f64(value, lineno, key)?),
            "class_counts" => {
                let inner = value
                    .strip_prefix('[')
                    .and_then(|v| v.strip_suffix(']'))
                    .ok_or_else(|| parse_err(lineno, "expected array"))?;
                let counts = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(", ")
                        .map(|t| parse_u64(t, lineno, "count"))
                        .collect::<Result<Vec<_>>>()?
                };
                class_counts = Some(counts);
            }
            "eval_sample_size" => eval_sample_size = Some(parse_u64(value, lineno, key)? as usize),
            "flags" => {
                let inner = value
                    .strip_prefix('[')
                    .and_then(|v| v.strip_suffix(']'))
                    .ok_or_else(|| parse_err(lineno, "expected array"))?;
                let fs = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(", ")
                        .map(|t| unquote(t, lineno))
                        .collect::<Result<Vec<_>>>()?
                };
                flags = Some(fs);
            }
            "seed" => seed = Some(parse_u64(value, lineno, key)?),
            "config_hash" => config_hash = Some(unquote(value, lineno)?),
            "strategy" => strategy = Some(unquote(value, lineno)?),
            "stream_hash" => stream_hash = Some(unquote(value, lineno)?),
            other => return Err(parse_err(lineno, format!("unknown report key '{other}'"))),
        }
    }

    let missing = |what: &str| parse_err(1, format!("missing report key '{what}'"));
    Ok(QualityReport {
        schema_version: schema_version.ok_or_else(|| missing("schema_version"))?,
        dataset_size: dataset_size.ok_or_else(|| missing("dataset_size"))?,
        vendi_score: vendi_score.ok_or_else(|| missing("vendi_score"))?,
        balance_entropy: balance_entropy.ok_or_else(|| missing("balance_entropy"))?,
        mean_max_similarity: mean_max_similarity.ok_or_else(|| missing("mean_max_similarity"))?,
        relevance_fraction: relevance_fraction.ok_or_else(|| missing("relevance_fraction"))?,
        class_counts: class_counts.ok_or_else(|| missing("class_counts"))?,
        eval_sample_size: eval_sample_size.ok_or_else(|| missing("eval_sample_size"))?,
        flags: flags.ok_or_else(|| missing("flags"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        config_hash: config_hash.ok_or_else(|| missing("config_hash"))?,
        strategy: strategy.ok_or_else(|| missing("strategy"))?,
        stream_hash: stream_hash.ok_or_else(|| missing("stream_hash"))?,
    })
}

pub fn read_report(path: &Path) -> Result<QualityReport> {
    report_from_string(&fs::read_to_string(path)?)
}
