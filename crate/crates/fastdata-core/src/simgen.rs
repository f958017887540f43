//! Seeded synthetic long-tail stream generator.
//!
//! Streams are clustered in feature space (one unit-vector center per
//! class), class frequencies follow a power law, and an optional drift
//! class can start appearing mid-stream. Generation is fully deterministic
//! per seed, so a stream can be regenerated or replayed from a file
//! bit-exactly.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::{normalize, FeatureVector};
use crate::sample::Sample;

/// Tag automatically attached to samples of classes in `relevant_classes`.
pub const RELEVANT_TAG: &str = "relevant";

/// Maximum pairwise cosine between generated cluster centers.
const CENTER_MAX_COS: f64 = 0.3;

/// Mid-stream appearance of a previously unseen class. The drift class is
/// always the last class index (`num_classes - 1`); before `step` it never
/// occurs, afterwards it occurs with `probability` per sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub step: u64,
    pub probability: f64,
}

/// Stream generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub num_classes: usize,
    pub dimension: usize,
    /// Power-law exponent of the class frequencies; 0 gives uniform.
    pub zipf_exponent: f64,
    /// Std-dev of the Gaussian cluster noise.
    pub cluster_noise_sigma: f64,
    /// Number of samples to emit.
    pub length: u64,
    #[serde(default)]
    pub drift: Option<DriftSpec>,
    /// Extra tags per class, keyed by class index.
    #[serde(default)]
    pub tag_rules: BTreeMap<usize, Vec<String>>,
    /// Classes whose samples get the `relevant` tag.
    #[serde(default)]
    pub relevant_classes: Vec<usize>,
    /// Explicit cluster centers (row per class); generated when absent.
    #[serde(default)]
    pub centers: Option<Vec<Vec<f64>>>,
    /// Generator seed; falls back to the experiment seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::ConfigError("num_classes must be >= 2".into()));
        }
        if self.dimension == 0 {
            return Err(Error::ConfigError("dimension must be >= 1".into()));
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent < 0.0 {
            return Err(Error::ConfigError("zipf_exponent must be >= 0".into()));
        }
        if !self.cluster_noise_sigma.is_finite() || self.cluster_noise_sigma < 0.0 {
            return Err(Error::ConfigError(
                "cluster_noise_sigma must be >= 0".into(),
            ));
        }
        if let Some(d) = &self.drift {
            if d.step >= self.length {
                return Err(Error::ConfigError(
                    "drift step must fall inside the stream".into(),
                ));
            }
            if !(0.0..=1.0).contains(&d.probability) {
                return Err(Error::ConfigError(
                    "drift probability must be in [0, 1]".into(),
                ));
            }
        }
        for class in self.tag_rules.keys() {
            if *class >= self.num_classes {
                return Err(Error::ConfigError(format!(
                    "tag rule for class {class} outside 0..{}",
                    self.num_classes
                )));
            }
        }
        for class in &self.relevant_classes {
            if *class >= self.num_classes {
                return Err(Error::ConfigError(format!(
                    "relevant class {class} outside 0..{}",
                    self.num_classes
                )));
            }
        }
        if let Some(centers) = &self.centers {
            if centers.len() != self.num_classes {
                return Err(Error::ConfigError(format!(
                    "{} centers supplied for {} classes",
                    centers.len(),
                    self.num_classes
                )));
            }
            for (i, c) in centers.iter().enumerate() {
                if c.len() != self.dimension {
                    return Err(Error::ConfigError(format!(
                        "center {i} has dimension {} instead of {}",
                        c.len(),
                        self.dimension
                    )));
                }
                if c.iter().any(|v| !v.is_finite()) || c.iter().all(|v| *v == 0.0) {
                    return Err(Error::ConfigError(format!(
                        "center {i} must be finite and nonzero"
                    )));
                }
                for (j, other) in centers.iter().enumerate().take(i) {
                    if c == other {
                        return Err(Error::ConfigError(format!(
                            "centers {j} and {i} are identical"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Power-law class frequencies: p(c) proportional to (c+1)^(-exponent).
pub fn class_frequencies(num_classes: usize, exponent: f64) -> Vec<f64> {
    let weights: Vec<f64> = (0..num_classes)
        .map(|c| ((c + 1) as f64).powf(-exponent))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn draw_class(cdf: &[f64], u: f64) -> usize {
    // cdf is nondecreasing and ends at ~1.0
    match cdf.iter().position(|&edge| u < edge) {
        Some(i) => i,
        None => cdf.len() - 1,
    }
}

fn generate_centers(
    num_classes: usize,
    dimension: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<FeatureVector>> {
    let mut centers: Vec<FeatureVector> = Vec::with_capacity(num_classes);
    let mut attempts = 0usize;
    while centers.len() < num_classes {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::ConfigError(format!(
                "could not place {num_classes} separated centers in dimension {dimension}; \
                 increase the dimension"
            )));
        }
        let raw: Vec<f64> = (0..dimension).map(|_| rng.sample(StandardNormal)).collect();
        let candidate = normalize(&FeatureVector::new(raw))?;
        if candidate.is_zero() {
            continue;
        }
        if centers
            .iter()
            .all(|c| candidate.dot(c) < CENTER_MAX_COS)
        {
            centers.push(candidate);
        }
    }
    Ok(centers)
}

/// Generate the full stream for a config. `fallback_seed` is used when the
/// config does not pin its own seed.
pub fn generate(config: &StreamConfig, fallback_seed: u64) -> Result<Vec<Sample>> {
    config.validate()?;
    let seed = config.seed.unwrap_or(fallback_seed);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let centers: Vec<FeatureVector> = match &config.centers {
        Some(rows) => rows
            .iter()
            .map(|r| normalize(&FeatureVector::new(r.clone())))
            .collect::<Result<_>>()?,
        None => generate_centers(config.num_classes, config.dimension, &mut rng)?,
    };

    // With drift, the last class is excluded from the base draw so it is
    // genuinely unseen before the drift step.
    let base_classes = if config.drift.is_some() {
        config.num_classes - 1
    } else {
        config.num_classes
    };
    if base_classes == 0 {
        return Err(Error::ConfigError(
            "drift needs at least one non-drift class".into(),
        ));
    }
    let freqs = class_frequencies(base_classes, config.zipf_exponent);
    let cdf: Vec<f64> = freqs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let mut tag_sets: Vec<BTreeSet<String>> = Vec::with_capacity(config.num_classes);
    for class in 0..config.num_classes {
        let mut tags: BTreeSet<String> = config
            .tag_rules
            .get(&class)
            .map(|ts| ts.iter().cloned().collect())
            .unwrap_or_default();
        if config.relevant_classes.contains(&class) {
            tags.insert(RELEVANT_TAG.to_string());
        }
        tag_sets.push(tags);
    }

    let sigma = config.cluster_noise_sigma;
    let mut samples = Vec::with_capacity(config.length as usize);
    for k in 0..config.length {
        let class = match &config.drift {
            Some(drift) if k >= drift.step && rng.gen::<f64>() < drift.probability => {
                config.num_classes - 1
            }
            _ => draw_class(&cdf, rng.gen::<f64>()),
        };
        let center = &centers[class];
        let noisy: Vec<f64> = center
            .values()
            .iter()
            .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let features = normalize(&FeatureVector::new(noisy))?;
        samples.push(Sample::new(k, features, tag_sets[class].clone(), class, k));
    }
    Ok(samples)
}
