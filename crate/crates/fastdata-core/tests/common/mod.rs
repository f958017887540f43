//! Shared test helpers: an independent brute-force eigendecomposition
//! oracle and random-data generators.
//!
//! The oracle deliberately shares no code with the library: its own
//! normalization, its own kernel assembly, and a hand-written cyclic Jacobi
//! eigensolver.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Eigenvalues of a symmetric matrix (row-major, n x n) by cyclic Jacobi
/// rotations.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    if n == 1 {
        return vec![a[0]];
    }
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Independent effective-diversity oracle: cosine kernel over n, Jacobi
/// spectrum, exp of the spectrum's Shannon entropy.
pub fn vendi_oracle(features: &[Vec<f64>]) -> f64 {
    let n = features.len();
    if n == 0 {
        return 0.0;
    }
    let rows: Vec<Vec<f64>> = features
        .iter()
        .map(|v| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                v.clone()
            } else {
                v.iter().map(|x| x / norm).collect()
            }
        })
        .collect();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(x, y)| x * y).sum();
            kernel[i * n + j] = dot.clamp(-1.0, 1.0) / n as f64;
        }
    }
    let mut entropy = 0.0;
    for lambda in jacobi_eigenvalues(kernel, n) {
        let l = lambda.clamp(0.0, 1.0);
        if l > 0.0 {
            entropy -= l * l.ln();
        }
    }
    entropy.exp()
}

/// Random finite feature matrix with entries in [-1, 1].
pub fn random_features(rng: &mut ChaCha12Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
