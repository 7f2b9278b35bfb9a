use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::analysis::cosine;
use crate::genclient::mock::hashed_embedding;
use crate::genclient::{Embedder, GenError};

/// Supplies embeddings for a text: one vector per token, or a single vector
/// for the whole text.
pub trait TokenEmbedder: Send + Sync {
    fn embed_tokens(&self, text: &str) -> Result<Vec<Vec<f64>>, GenError>;
}

/// Deterministic per-character embedder: each non-whitespace character maps
/// to a fixed hashed direction, so equal characters have cosine 1.
#[derive(Debug, Clone, Copy)]
pub struct HashingCharEmbedder {
    pub dimension: usize,
}

impl Default for HashingCharEmbedder {
    fn default() -> Self {
        Self { dimension: 256 }
    }
}

impl TokenEmbedder for HashingCharEmbedder {
    fn embed_tokens(&self, text: &str) -> Result<Vec<Vec<f64>>, GenError> {
        Ok(text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| hashed_embedding(c.encode_utf8(&mut [0; 4]), self.dimension))
            .collect())
    }
}

/// Whole-text embeddings from an embedding endpoint; always one vector.
pub struct WholeTextEmbedder<'a>(pub &'a Embedder);

impl TokenEmbedder for WholeTextEmbedder<'_> {
    fn embed_tokens(&self, text: &str) -> Result<Vec<Vec<f64>>, GenError> {
        Ok(vec![self.0.embed(text)?.values().to_vec()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BertScoreMode {
    /// Greedy token matching.
    Tokens,
    /// Cosine of one vector per text.
    WholeText,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mode: BertScoreMode,
}

/// Greedy-matching BERTScore without baseline rescaling, scaled to
/// [0, 100]. If either side yields a single vector the score is the plain
/// cosine of the two first vectors and the mode says so.
pub fn bertscore(candidate: &str, reference: &str, embedder: &dyn TokenEmbedder) -> Result<BertScore, EvalError> {
    let c = embedder.embed_tokens(candidate)?;
    let r = embedder.embed_tokens(reference)?;
    if c.is_empty() {
        return Err(EvalError::EmptyInput("candidate"));
    }
    if r.is_empty() {
        return Err(EvalError::EmptyInput("reference"));
    }
    if let Some(bad) = c.iter().chain(&r).find(|v| v.len() != c[0].len()) {
        return Err(EvalError::Embedding(GenError::DimensionMismatch {
            declared: c[0].len(),
            received: bad.len(),
        }));
    }
    if c.iter().chain(&r).any(|v| v.iter().all(|&x| x == 0.0)) {
        return Err(EvalError::Embedding(GenError::InvalidEmbedding("zero token vector".into())));
    }
    let clamp = |x: f64| (100.0 * x).clamp(0.0, 100.0);
    if c.len() == 1 || r.len() == 1 {
        let s = clamp(cosine(&c[0], &r[0]));
        return Ok(BertScore {
            precision: s,
            recall: s,
            f1: s,
            mode: BertScoreMode::WholeText,
        });
    }
    let sims: Vec<Vec<f64>> = c.iter().map(|x| r.iter().map(|y| cosine(x, y)).collect()).collect();
    let precision = sims
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / c.len() as f64;
    let recall = (0..r.len())
        .map(|j| sims.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / r.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(BertScore {
        precision: clamp(precision),
        recall: clamp(recall),
        f1: clamp(f1),
        mode: BertScoreMode::Tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<(String, Vec<Vec<f64>>)>);

    impl TokenEmbedder for Fixed {
        fn embed_tokens(&self, text: &str) -> Result<Vec<Vec<f64>>, GenError> {
            Ok(self.0.iter().find(|(k, _)| k == text).unwrap().1.clone())
        }
    }

    #[test]
    fn identity_and_orthogonal() {
        let e = HashingCharEmbedder::default();
        let s = bertscore("我很难过", "我很难过", &e).unwrap();
        assert!((s.f1 - 100.0).abs() < 1e-9);
        assert_eq!(s.mode, BertScoreMode::Tokens);
        let f = Fixed(vec![
            ("c".into(), vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]]),
            ("r".into(), vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]),
        ]);
        assert_eq!(bertscore("c", "r", &f).unwrap().f1, 0.0);
    }

    #[test]
    fn three_token_greedy() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // Candidate: e1, e2, e3. Reference: e1, (e2+e3)/sqrt2.
        let f = Fixed(vec![
            ("c".into(), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]),
            ("r".into(), vec![vec![1.0, 0.0, 0.0], vec![0.0, h, h]]),
        ]);
        let s = bertscore("c", "r", &f).unwrap();
        let p = (1.0 + h + h) / 3.0;
        let r = (1.0 + h) / 2.0;
        assert!((s.precision - 100.0 * p).abs() < 1e-9);
        assert!((s.recall - 100.0 * r).abs() < 1e-9);
        assert!((s.f1 - 100.0 * 2.0 * p * r / (p + r)).abs() < 1e-9);
    }

    #[test]
    fn whole_text_fallback() {
        let f = Fixed(vec![("c".into(), vec![vec![1.0, 1.0]]), ("r".into(), vec![vec![1.0, 0.0]])]);
        let s = bertscore("c", "r", &f).unwrap();
        assert_eq!(s.mode, BertScoreMode::WholeText);
        assert!((s.f1 - 100.0 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }
}
