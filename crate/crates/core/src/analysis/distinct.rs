use std::collections::HashSet;
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Tokenizer};
use crate::corpus::QaPair;
use crate::dialogue::Dialogue;

/// Speaker-free text of one dialogue, ready for embedding or n-gram counting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueString {
    pub text: String,
    pub source_dialogue_id: String,
}

/// Concatenates utterances in order with `joint` between them. The empty
/// joint is the default everywhere in the pipeline.
pub fn dialogue_to_string(d: &Dialogue, joint: &str) -> DialogueString {
    let text = d
        .utterances
        .iter()
        .map(|u| u.text.as_str())
        .collect::<Vec<_>>()
        .join(joint);
    DialogueString {
        text,
        source_dialogue_id: d.id.clone(),
    }
}

/// A seed QA viewed as a single-turn dialogue (question then answer).
pub fn qa_to_string(qa: &QaPair, joint: &str) -> DialogueString {
    DialogueString {
        text: format!("{}{joint}{}", qa.question, qa.answer),
        source_dialogue_id: qa.id.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinctReport {
    pub n: usize,
    pub unique_ngrams: u64,
    pub total_ngrams: u64,
    pub distinct_ratio: f64,
}

impl DistinctReport {
    pub fn from_counts(n: usize, unique_ngrams: u64, total_ngrams: u64) -> Result<Self, AnalysisError> {
        if !(1..=3).contains(&n) {
            return Err(AnalysisError::InvalidOrder(n));
        }
        if total_ngrams == 0 {
            return Err(AnalysisError::NoNgrams { n });
        }
        debug_assert!(unique_ngrams <= total_ngrams);
        Ok(Self {
            n,
            unique_ngrams,
            total_ngrams,
            distinct_ratio: unique_ngrams as f64 / total_ngrams as f64,
        })
    }
}

impl fmt::Display for DistinctReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "distinct-{}: {}/{} = {:.3}",
            self.n, self.unique_ngrams, self.total_ngrams, self.distinct_ratio
        )
    }
}

/// Pooled n-gram counts: (number of distinct n-grams, number of n-gram
/// occurrences) across all sequences. N-grams never span two sequences.
pub fn count_ngrams<T: Hash + Eq>(sequences: &[Vec<T>], n: usize) -> (u64, u64) {
    assert!(n > 0);
    let mut seen: HashSet<&[T]> = HashSet::new();
    let mut total = 0u64;
    for seq in sequences.iter().filter(|s| s.len() >= n) {
        for gram in seq.windows(n) {
            seen.insert(gram);
            total += 1;
        }
    }
    (seen.len() as u64, total)
}

pub fn distinct_n(
    strings: &[DialogueString],
    n: usize,
    tokenizer: &dyn Tokenizer,
) -> Result<DistinctReport, AnalysisError> {
    if strings.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    if !(1..=3).contains(&n) {
        return Err(AnalysisError::InvalidOrder(n));
    }
    let sequences: Vec<Vec<String>> = strings.iter().map(|s| tokenizer.tokenize(&s.text)).collect();
    let (unique, total) = count_ngrams(&sequences, n);
    DistinctReport::from_counts(n, unique, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CharTokenizer;
    use crate::dialogue::{Method, Utterance};

    fn ds(text: &str) -> DialogueString {
        DialogueString {
            text: text.into(),
            source_dialogue_id: "x".into(),
        }
    }

    #[test]
    fn concatenation_drops_roles() {
        let d = Dialogue::new(
            "d1",
            Method::Smile,
            vec![Utterance::help_seeker("hi").unwrap(), Utterance::supporter("hello").unwrap()],
        )
        .unwrap();
        let s = dialogue_to_string(&d, "");
        assert_eq!(s.text, "hihello");
        assert_eq!(s.source_dialogue_id, "d1");
        assert_eq!(dialogue_to_string(&d, ";").text, "hi;hello");
    }

    #[test]
    fn repeated_token() {
        let r = distinct_n(&[ds("aaaaaaaaaa")], 1, &CharTokenizer).unwrap();
        assert_eq!((r.unique_ngrams, r.total_ngrams), (1, 10));
        assert!((r.distinct_ratio - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ngrams_do_not_cross_strings() {
        // "ab","ba" pooled: bigrams {ab, ba}; a spanning count would add "bb".
        let r = distinct_n(&[ds("ab"), ds("ba"), ds("ab")], 2, &CharTokenizer).unwrap();
        assert_eq!((r.unique_ngrams, r.total_ngrams), (2, 3));
    }

    #[test]
    fn errors() {
        assert!(matches!(distinct_n(&[], 1, &CharTokenizer), Err(AnalysisError::EmptyCorpus)));
        assert!(matches!(distinct_n(&[ds("ab")], 4, &CharTokenizer), Err(AnalysisError::InvalidOrder(4))));
        assert!(matches!(distinct_n(&[ds("ab")], 3, &CharTokenizer), Err(AnalysisError::NoNgrams { n: 3 })));
    }
}
