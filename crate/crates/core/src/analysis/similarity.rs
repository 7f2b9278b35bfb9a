use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::genclient::EmbeddingVector;
use crate::scalar::{self, Scalar};

/// Cosine similarity of two equal-length nonzero vectors, clamped to
/// [-1, 1] so that rounding never pushes it outside the range.
pub fn cosine<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let dot: S = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: S = a.iter().map(|&x| x * x).sum::<S>().sqrt();
    let nb: S = b.iter().map(|&x| x * x).sum::<S>().sqrt();
    (dot / (na * nb)).max(-S::one()).min(S::one())
}

/// A set of similarity values with its summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDistribution<S> {
    pub values: Vec<S>,
    pub mean: S,
    /// Population standard deviation.
    pub stddev: S,
    pub median: S,
    pub boundary_mu_minus_3sigma: S,
}

impl<S: Scalar> SimilarityDistribution<S> {
    /// `None` for an empty input. Mean and spread use two passes over the
    /// stored values.
    pub fn from_values(values: Vec<S>) -> Option<Self> {
        let mean = scalar::mean(&values)?;
        let stddev = scalar::population_stddev(&values, mean);
        let median = scalar::median(&values)?;
        let three = S::from_usize_lossy(3);
        Some(Self {
            boundary_mu_minus_3sigma: mean - three * stddev,
            values,
            mean,
            stddev,
            median,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of values strictly above `threshold`.
    pub fn fraction_above(&self, threshold: S) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().filter(|&&v| v > threshold).count() as f64 / self.values.len() as f64
    }
}

/// Cosine similarity of every unordered pair, in row-major order
/// `(0,1), (0,2), ..., (k-2,k-1)`. Rows are computed in parallel.
pub fn pairwise_cosine<S: Scalar>(embeddings: &[EmbeddingVector<S>]) -> Result<SimilarityDistribution<S>, AnalysisError> {
    let k = embeddings.len();
    if k < 2 {
        return Err(AnalysisError::TooFewEmbeddings(k));
    }
    let dim = embeddings[0].dimension();
    for (index, e) in embeddings.iter().enumerate() {
        if e.dimension() != dim {
            return Err(AnalysisError::DimensionMismatch {
                index,
                expected: dim,
                found: e.dimension(),
            });
        }
    }
    // Normalize once up front so each pair costs a single dot product.
    let mut unit: Vec<Vec<S>> = Vec::with_capacity(k);
    for (index, e) in embeddings.iter().enumerate() {
        let norm = e.norm();
        if norm == S::zero() {
            return Err(AnalysisError::ZeroVector { index });
        }
        unit.push(e.values().iter().map(|&v| v / norm).collect());
    }
    let rows: Vec<Vec<S>> = (0..k - 1)
        .into_par_iter()
        .map(|i| {
            let a = &unit[i];
            unit[i + 1..]
                .iter()
                .map(|b| {
                    let dot: S = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
                    dot.max(-S::one()).min(S::one())
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(k * (k - 1) / 2);
    for row in rows {
        values.extend(row);
    }
    Ok(SimilarityDistribution::from_values(values).expect("k >= 2 gives at least one pair"))
}
