use serde::{Deserialize, Serialize};

use super::{cosine, dialogue_to_string, qa_to_string, AnalysisError, SimilarityDistribution};
use crate::corpus::QaPair;
use crate::dialogue::Dialogue;
use crate::genclient::{EmbeddingVector, GenError};
use crate::scalar::Scalar;

/// Similarity of one seed QA to its rewritten dialogue (`attract`) and to a
/// baseline dialogue generated without the seed (`repel`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord<S> {
    pub attract: S,
    pub repel: S,
}

pub fn transform_similarity<S, F>(
    seed: &QaPair,
    rewritten: &Dialogue,
    baseline: &Dialogue,
    embed: F,
) -> Result<TransformRecord<S>, AnalysisError>
where
    S: Scalar,
    F: Fn(&str) -> Result<EmbeddingVector<S>, GenError>,
{
    let seed_vec = embed(&qa_to_string(seed, "").text)?;
    let rewritten_vec = embed(&dialogue_to_string(rewritten, "").text)?;
    let baseline_vec = embed(&dialogue_to_string(baseline, "").text)?;
    Ok(TransformRecord {
        attract: checked_cosine(&seed_vec, &rewritten_vec, 1)?,
        repel: checked_cosine(&seed_vec, &baseline_vec, 2)?,
    })
}

fn checked_cosine<S: Scalar>(a: &EmbeddingVector<S>, b: &EmbeddingVector<S>, index: usize) -> Result<S, AnalysisError> {
    if a.dimension() != b.dimension() {
        return Err(AnalysisError::DimensionMismatch {
            index,
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    if a.norm() == S::zero() {
        return Err(AnalysisError::ZeroVector { index: 0 });
    }
    if b.norm() == S::zero() {
        return Err(AnalysisError::ZeroVector { index });
    }
    Ok(cosine(a.values(), b.values()))
}

/// Batch view of attract/repel values. The boundary is `mean - 3 sigma` of
/// the attract distribution; a healthy rewrite keeps nearly every attract
/// value above it while the repel distribution sits mostly below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformReport<S> {
    pub attract: SimilarityDistribution<S>,
    pub repel: SimilarityDistribution<S>,
    pub boundary: S,
    pub attract_above_boundary: f64,
    pub repel_above_boundary: f64,
}

impl<S: Scalar> TransformReport<S> {
    pub fn from_records(records: &[TransformRecord<S>]) -> Result<Self, AnalysisError> {
        let attract = SimilarityDistribution::from_values(records.iter().map(|r| r.attract).collect())
            .ok_or(AnalysisError::EmptyCorpus)?;
        let repel = SimilarityDistribution::from_values(records.iter().map(|r| r.repel).collect())
            .ok_or(AnalysisError::EmptyCorpus)?;
        let boundary = attract.boundary_mu_minus_3sigma;
        Ok(Self {
            attract_above_boundary: attract.fraction_above(boundary),
            repel_above_boundary: repel.fraction_above(boundary),
            boundary,
            attract,
            repel,
        })
    }

    /// Fraction of records whose attract exceeds their repel.
    pub fn attract_wins(records: &[TransformRecord<S>]) -> f64 {
        if records.is_empty() {
            return 0.0;
        }
        records.iter().filter(|r| r.attract > r.repel).count() as f64 / records.len() as f64
    }
}
