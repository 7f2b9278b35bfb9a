use std::collections::HashSet;
use std::path::Path;

use super::AnalysisError;

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// One token per non-whitespace code point.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        text.chars().filter(|c| !c.is_whitespace()).map(String::from).collect()
    }
}

/// Greedy longest-match tokenizer over a subword vocabulary. Characters
/// not covered by any vocabulary entry become single-character tokens.
#[derive(Debug, Clone, Default)]
pub struct VocabTokenizer {
    vocab: HashSet<String>,
    max_len: usize,
}

impl VocabTokenizer {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vocab: HashSet<String> = entries
            .into_iter()
            .map(Into::into)
            .filter(|e: &String| !e.is_empty())
            .collect();
        let max_len = vocab.iter().map(|e| e.chars().count()).max().unwrap_or(1);
        Self { vocab, max_len }
    }

    /// One entry per line; a tab-separated second column (e.g. an id or
    /// score) is ignored.
    pub fn from_file(path: &Path) -> Result<Self, AnalysisError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AnalysisError::Tokenizer(format!("{}: {e}", path.display())))?;
        Ok(Self::new(
            text.lines()
                .map(|l| l.split('\t').next().unwrap_or("").trim_end_matches('\r'))
                .map(str::to_string),
        ))
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }
}

impl Tokenizer for VocabTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            let chars: Vec<char> = word.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                let longest = (2..=self.max_len.min(chars.len() - i))
                    .rev()
                    .find(|&len| self.vocab.contains(&chars[i..i + len].iter().collect::<String>()))
                    .unwrap_or(1);
                out.push(chars[i..i + longest].iter().collect());
                i += longest;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_tokens_skip_whitespace() {
        assert_eq!(CharTokenizer.tokenize("我 很好\n"), vec!["我", "很", "好"]);
    }

    #[test]
    fn vocab_prefers_longest_match() {
        let t = VocabTokenizer::new(["压力", "压力很大", "最近"]);
        assert_eq!(t.tokenize("我最近压力很大"), vec!["我", "最近", "压力很大"]);
        assert_eq!(t.tokenize("压力大"), vec!["压力", "大"]);
        assert_eq!(VocabTokenizer::default().tokenize("ab c"), vec!["a", "b", "c"]);
    }

    #[test]
    fn vocab_file_loading() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.txt");
        std::fs::write(&p, "最近\t1\n压力\t2\n\n").unwrap();
        let t = VocabTokenizer::from_file(&p).unwrap();
        assert_eq!(t.len(), 2);
        assert!(VocabTokenizer::from_file(&dir.path().join("missing")).is_err());
    }
}
