//! Dataset quality metrics: diversity (Vendi score), class balance
//! (normalized entropy), redundancy (mean max similarity), and relevance
//! (predicate-satisfaction ratio), plus whole-dataset evaluation into a
//! [`QualityReport`].
//!
//! All metric functions are pure; evaluating many datasets in parallel is
//! safe.

use nalgebra::DMatrix;
use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::feature::{normalize, FeatureVector};
use crate::sample::Sample;
use crate::target::{TagPredicate, TargetState};

/// Exact eigendecomposition is used up to this many samples; larger datasets
/// are evaluated on a seeded uniform subsample of this size.
pub const EVAL_EXACT_CAP: usize = 2048;

/// The four quality characteristics the metrics cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityCharacteristic {
    Relevance,
    Balance,
    Diversity,
    Similarity,
}

impl QualityCharacteristic {
    pub const ALL: [QualityCharacteristic; 4] = [
        QualityCharacteristic::Relevance,
        QualityCharacteristic::Balance,
        QualityCharacteristic::Diversity,
        QualityCharacteristic::Similarity,
    ];
}

/// Metric values for one finalized dataset plus run provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub schema_version: u32,
    pub dataset_size: usize,
    /// Effective diversity in [1, n]; 0 for an empty dataset.
    pub vendi_score: f64,
    /// Class-distribution evenness in [0, 1].
    pub balance_entropy: f64,
    /// Mean over samples of the max similarity to any other sample, in [0, 1].
    pub mean_max_similarity: f64,
    /// Fraction of samples satisfying the relevance predicate.
    pub relevance_fraction: f64,
    pub class_counts: Vec<u64>,
    /// Number of samples the feature-space metrics were computed on
    /// (smaller than `dataset_size` when subsampled).
    pub eval_sample_size: usize,
    /// Degenerate-input markers, e.g. `empty_dataset`.
    pub flags: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    pub strategy: String,
    pub stream_hash: String,
}

/// Run identity recorded in every report.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub strategy: String,
    pub stream_hash: String,
}

fn normalized_rows(features: &[FeatureVector]) -> Result<Vec<FeatureVector>> {
    features.iter().map(normalize).collect()
}

/// Effective diversity of a dataset: exp of the Shannon entropy of the
/// eigenvalue spectrum of the cosine-similarity kernel divided by n.
///
/// 1 when all vectors are identical, n when all are mutually orthogonal,
/// 0 for an empty input.
pub fn vendi_score(features: &[FeatureVector]) -> Result<f64> {
    let n = features.len();
    if n == 0 {
        return Ok(0.0);
    }
    let dim = features[0].len();
    for f in features {
        if f.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: f.len(),
            });
        }
    }
    let rows = normalized_rows(features)?;
    // Kernel over n; zero vectors have similarity 0 to everything,
    // including themselves.
    let mut k = DMatrix::<f64>::zeros(n, n);
    let nf = n as f64;
    for i in 0..n {
        for j in i..n {
            let v = rows[i].dot(&rows[j]).clamp(-1.0, 1.0) / nf;
            if !v.is_finite() {
                return Err(Error::InvalidFeature(
                    "non-finite similarity kernel entry".into(),
                ));
            }
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    let eigen = k.symmetric_eigenvalues();
    let mut entropy = 0.0;
    for lambda in eigen.iter() {
        let l = lambda.clamp(0.0, 1.0);
        if l > 0.0 {
            entropy -= l * l.ln();
        }
    }
    Ok(entropy.exp())
}

/// Normalized Shannon entropy of a class histogram: 1 for uniform, 0 for a
/// single-class dataset.
pub fn balance_entropy(counts: &[u64]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::ConfigError(
            "balance entropy needs at least 2 classes".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let total = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.ln();
        }
    }
    Ok(h / (counts.len() as f64).ln())
}

/// Mean over samples of each sample's maximum similarity to any other
/// sample, negatives clamped to 0. High values mean redundancy.
pub fn mean_max_similarity(features: &[FeatureVector]) -> Result<f64> {
    let n = features.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let rows = normalized_rows(features)?;
    let mut acc = 0.0;
    for i in 0..n {
        let mut best = f64::NEG_INFINITY;
        for j in 0..n {
            if i != j {
                best = best.max(rows[i].dot(&rows[j]).clamp(-1.0, 1.0));
            }
        }
        acc += best.max(0.0);
    }
    Ok(acc / n as f64)
}

/// Fraction of samples whose tags satisfy the predicate.
pub fn relevance_fraction(samples: &[Sample], predicate: &TagPredicate) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = samples.iter().filter(|s| predicate.matches(&s.tags)).count();
    Ok(hits as f64 / samples.len() as f64)
}

/// Evaluate a finalized dataset against a target, producing all four metric
/// values plus provenance. Deterministic for identical inputs; degenerate
/// datasets yield flagged zero metrics instead of errors.
pub fn evaluate_dataset(
    samples: &[Sample],
    target: &TargetState,
    provenance: &Provenance,
) -> Result<QualityReport> {
    let n = samples.len();
    let mut flags = Vec::new();
    let mut class_counts = vec![0u64; target.num_classes()];
    for s in samples {
        if s.label >= class_counts.len() {
            return Err(Error::InvalidSample {
                id: s.id,
                msg: format!(
                    "label {} outside target's {} classes",
                    s.label,
                    class_counts.len()
                ),
            });
        }
        class_counts[s.label] += 1;
    }

    if n == 0 {
        flags.push("empty_dataset".to_string());
        return Ok(QualityReport {
            schema_version: 1,
            dataset_size: 0,
            vendi_score: 0.0,
            balance_entropy: 0.0,
            mean_max_similarity: 0.0,
            relevance_fraction: 0.0,
            class_counts,
            eval_sample_size: 0,
            flags,
            seed: provenance.seed,
            config_hash: provenance.config_hash.clone(),
            strategy: provenance.strategy.clone(),
            stream_hash: provenance.stream_hash.clone(),
        });
    }

    // Feature-space metrics run on a seeded subsample past the exact cap.
    let eval_features: Vec<FeatureVector> = if n > EVAL_EXACT_CAP {
        flags.push("subsampled".to_string());
        let mut rng = ChaCha12Rng::seed_from_u64(provenance.seed);
        let mut idx: Vec<usize> = index_sample(&mut rng, n, EVAL_EXACT_CAP).into_vec();
        idx.sort_unstable();
        idx.iter().map(|&i| samples[i].features.clone()).collect()
    } else {
        samples.iter().map(|s| s.features.clone()).collect()
    };

    let vendi = vendi_score(&eval_features)?;
    let mean_max = if eval_features.len() < 2 {
        flags.push("similarity_undefined".to_string());
        0.0
    } else {
        mean_max_similarity(&eval_features)?
    };
    let balance = balance_entropy(&class_counts)?;
    let relevance = relevance_fraction(samples, &target.relevance)?;

    Ok(QualityReport {
        schema_version: 1,
        dataset_size: n,
        vendi_score: vendi,
        balance_entropy: balance,
        mean_max_similarity: mean_max,
        relevance_fraction: relevance,
        class_counts,
        eval_sample_size: eval_features.len(),
        flags,
        seed: provenance.seed,
        config_hash: provenance.config_hash.clone(),
        strategy: provenance.strategy.clone(),
        stream_hash: provenance.stream_hash.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::ObjectiveWeights;
    use std::collections::BTreeSet;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec())
    }

    fn sample(id: u64, label: usize, tags: &[&str], features: &[f64]) -> Sample {
        Sample::new(
            id,
            fv(features),
            tags.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
            label,
            id,
        )
    }

    #[test]
    fn vendi_identical_copies_is_one() {
        for n in [1, 2, 7, 30] {
            let data = vec![fv(&[0.3, 0.4, 0.5]); n];
            let v = vendi_score(&data).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "n={n}: {v}");
        }
    }

    #[test]
    fn vendi_orthogonal_is_n() {
        for n in [2, 5, 16] {
            let data: Vec<FeatureVector> = (0..n)
                .map(|i| {
                    let mut v = vec![0.0; n];
                    v[i] = 2.5;
                    fv(&v)
                })
                .collect();
            let v = vendi_score(&data).unwrap();
            assert!((v - n as f64).abs() < 1e-6, "n={n}: {v}");
        }
    }

    #[test]
    fn vendi_half_cosine_pair() {
        // oracle: eigenvalues of [[1,.5],[.5,1]]/2 are {0.75, 0.25};
        // exp(-.75 ln .75 - .25 ln .25)
        let a = fv(&[1.0, 0.0, 0.0]);
        let half = fv(&[0.5, 3f64.sqrt() / 2.0, 0.0]);
        let v = vendi_score(&[a, half]).unwrap();
        assert!((v - 1.7547653506033232).abs() < 1e-9, "{v}");
    }

    #[test]
    fn vendi_empty_is_zero() {
        assert_eq!(vendi_score(&[]).unwrap(), 0.0);
    }

    #[test]
    fn vendi_minority_duplicate_can_increase() {
        // The score is frequency-sensitive: duplicating the minority member
        // of {a,a,a,b} rebalances the spectrum from {.75,.25} to {.6,.4}.
        let a = fv(&[1.0, 0.0]);
        let b = fv(&[0.0, 1.0]);
        let base = vec![a.clone(), a.clone(), a, b.clone()];
        let v0 = vendi_score(&base).unwrap();
        let mut dup = base;
        dup.push(b);
        let v1 = vendi_score(&dup).unwrap();
        assert!((v0 - 1.7547653506033232).abs() < 1e-9, "{v0}");
        assert!((v1 - 1.960131704207791).abs() < 1e-9, "{v1}");
        assert!(v1 > v0);
    }

    #[test]
    fn vendi_rejects_mixed_dimensions() {
        assert!(matches!(
            vendi_score(&[fv(&[1.0]), fv(&[1.0, 2.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn balance_uniform_and_degenerate() {
        assert_eq!(balance_entropy(&[5, 5]).unwrap(), 1.0);
        assert_eq!(balance_entropy(&[10, 0]).unwrap(), 0.0);
    }

    #[test]
    fn balance_three_to_one() {
        // oracle: -(0.75 log2 0.75 + 0.25 log2 0.25)
        let b = balance_entropy(&[3, 1]).unwrap();
        assert!((b - 0.8112781244591328).abs() < 1e-12, "{b}");
    }

    #[test]
    fn balance_errors() {
        assert!(matches!(balance_entropy(&[0, 0]), Err(Error::EmptyDataset)));
        assert!(matches!(balance_entropy(&[7]), Err(Error::ConfigError(_))));
    }

    #[test]
    fn mean_max_identical_pair_is_one() {
        let v = mean_max_similarity(&[fv(&[1.0, 1.0]), fv(&[1.0, 1.0])]).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mean_max_orthogonal_clamps_to_zero() {
        let v = mean_max_similarity(&[fv(&[1.0, 0.0]), fv(&[0.0, 1.0])]).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn mean_max_three_vector_case() {
        // oracle: every point's max similarity is cos 45
        let v =
            mean_max_similarity(&[fv(&[1.0, 0.0]), fv(&[0.0, 1.0]), fv(&[1.0, 1.0])]).unwrap();
        assert!((v - 0.7071067811865475).abs() < 1e-12, "{v}");
    }

    #[test]
    fn mean_max_needs_two() {
        assert!(matches!(
            mean_max_similarity(&[fv(&[1.0])]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn relevance_fraction_cases() {
        let night = TagPredicate::Has("night".into());
        let all_night: Vec<Sample> = (0..4)
            .map(|i| sample(i, 0, &["night"], &[1.0, 0.0]))
            .collect();
        assert_eq!(relevance_fraction(&all_night, &night).unwrap(), 1.0);

        let none: Vec<Sample> = (0..3).map(|i| sample(i, 0, &["day"], &[1.0, 0.0])).collect();
        assert_eq!(relevance_fraction(&none, &night).unwrap(), 0.0);

        let mut mixed: Vec<Sample> = all_night[..3].to_vec();
        mixed.push(sample(4, 0, &["day"], &[1.0, 0.0]));
        assert_eq!(relevance_fraction(&mixed, &night).unwrap(), 0.75);

        assert!(matches!(
            relevance_fraction(&[], &night),
            Err(Error::EmptyDataset)
        ));
    }

    fn test_target(num_classes: usize) -> TargetState {
        TargetState::uniform(
            num_classes,
            TagPredicate::Always,
            1_000_000,
            0.5,
            16,
            ObjectiveWeights::default(),
        )
        .unwrap()
    }

    fn prov() -> Provenance {
        Provenance {
            seed: 7,
            config_hash: "deadbeef".into(),
            strategy: "test".into(),
            stream_hash: "cafe".into(),
        }
    }

    #[test]
    fn evaluate_empty_dataset_is_flagged() {
        let r = evaluate_dataset(&[], &test_target(2), &prov()).unwrap();
        assert_eq!(r.dataset_size, 0);
        assert_eq!(r.vendi_score, 0.0);
        assert!(r.flags.iter().any(|f| f == "empty_dataset"));
    }

    #[test]
    fn evaluate_single_sample() {
        let r =
            evaluate_dataset(&[sample(0, 1, &[], &[1.0, 2.0])], &test_target(2), &prov()).unwrap();
        assert!((r.vendi_score - 1.0).abs() < 1e-9);
        assert_eq!(r.balance_entropy, 0.0);
        assert_eq!(r.mean_max_similarity, 0.0);
        assert!(r.flags.iter().any(|f| f == "similarity_undefined"));
    }

    #[test]
    fn evaluate_subsamples_past_cap_deterministically() {
        let samples: Vec<Sample> = (0..(EVAL_EXACT_CAP as u64 + 50))
            .map(|i| {
                let angle = i as f64 * 0.001;
                sample(i, (i % 2) as usize, &[], &[angle.cos(), angle.sin()])
            })
            .collect();
        let a = evaluate_dataset(&samples, &test_target(2), &prov()).unwrap();
        let b = evaluate_dataset(&samples, &test_target(2), &prov()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.eval_sample_size, EVAL_EXACT_CAP);
        assert!(a.flags.iter().any(|f| f == "subsampled"));
        assert_eq!(a.dataset_size, EVAL_EXACT_CAP + 50);
    }
}
