//! Wording cleanup and length truncation of QA pairs before rewriting.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::QaPair;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementRule {
    #[serde(rename = "order")]
    pub order_index: u32,
    pub pattern: String,
    pub replacement: String,
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("rule {order_index} has an empty pattern")]
    EmptyPattern { order_index: u32 },
    #[error("order index {0} is used by more than one rule")]
    DuplicateOrder(u32),
    #[error("question of `{qa_id}` has {question_chars} characters; at most {limit} fit with the minimum answer allowance")]
    QuestionTooLong {
        qa_id: String,
        question_chars: usize,
        limit: usize,
    },
    #[error("cleaning config {path}: {reason}")]
    Config { path: String, reason: String },
}

/// Rules validated and sorted by `order_index`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleList {
    rules: Vec<ReplacementRule>,
}

impl RuleList {
    pub fn new(mut rules: Vec<ReplacementRule>) -> Result<Self, PreprocessError> {
        let mut seen = HashSet::new();
        for r in &rules {
            if r.pattern.is_empty() {
                return Err(PreprocessError::EmptyPattern { order_index: r.order_index });
            }
            if !seen.insert(r.order_index) {
                return Err(PreprocessError::DuplicateOrder(r.order_index));
            }
        }
        rules.sort_by_key(|r| r.order_index);
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[ReplacementRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Applies every rule globally, in order; later rules see earlier output.
pub fn auto_clean(text: &str, rules: &RuleList) -> String {
    auto_clean_counted(text, rules).0
}

/// [`auto_clean`] plus the number of replacements performed.
pub fn auto_clean_counted(text: &str, rules: &RuleList) -> (String, usize) {
    let mut current = text.to_string();
    let mut replaced = 0;
    for rule in &rules.rules {
        let hits = current.matches(rule.pattern.as_str()).count();
        if hits > 0 {
            replaced += hits;
            current = current.replace(rule.pattern.as_str(), &rule.replacement);
        }
    }
    (current, replaced)
}

/// A watch-term occurrence left for a human to resolve. Offsets count
/// characters (code points), end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReviewFlag {
    pub qa_id: String,
    pub term: String,
    pub span_start: usize,
    pub span_end: usize,
}

/// Every occurrence, overlapping ones included, of every watch term, sorted
/// by start offset then by the term's position in `watch_terms`.
pub fn flag_manual_review(qa_id: &str, text: &str, watch_terms: &[String]) -> Vec<ReviewFlag> {
    let mut flags = Vec::new();
    // Byte offset of each char boundary, so spans can be reported in chars.
    let boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
    for (term_rank, term) in watch_terms.iter().enumerate() {
        if term.is_empty() {
            continue;
        }
        let term_chars = term.chars().count();
        for (char_pos, &byte_pos) in boundaries.iter().enumerate() {
            if text[byte_pos..].starts_with(term.as_str()) {
                flags.push((
                    char_pos,
                    term_rank,
                    ReviewFlag {
                        qa_id: qa_id.to_string(),
                        term: term.clone(),
                        span_start: char_pos,
                        span_end: char_pos + term_chars,
                    },
                ));
            }
        }
    }
    flags.sort_by_key(|(pos, rank, _)| (*pos, *rank));
    flags.into_iter().map(|(_, _, f)| f).collect()
}

pub const DEFAULT_MAX_CHARS: usize = 1800;
pub const DEFAULT_MIN_ANSWER_CHARS: usize = 100;

/// Caps question + answer at `max_chars` code points by cutting the answer's
/// tail. The question is never shortened.
pub fn truncate_qa(qa: &QaPair, max_chars: usize, min_answer_chars: usize) -> Result<QaPair, PreprocessError> {
    let question_chars = qa.question.chars().count();
    let limit = max_chars.saturating_sub(min_answer_chars);
    if question_chars > limit {
        return Err(PreprocessError::QuestionTooLong {
            qa_id: qa.id.clone(),
            question_chars,
            limit,
        });
    }
    let answer_budget = max_chars - question_chars;
    let mut out = qa.clone();
    if let Some((cut, _)) = qa.answer.char_indices().nth(answer_budget) {
        out.answer.truncate(cut);
    }
    Ok(out)
}

/// Rule list, watch terms and truncation budget, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningConfig {
    #[serde(default = "default_max_chars")]
    pub max_chars: usize,
    #[serde(default = "default_min_answer")]
    pub min_answer_chars: usize,
    #[serde(default)]
    pub watch_terms: Vec<String>,
    #[serde(default)]
    pub rules: Vec<ReplacementRule>,
}

fn default_max_chars() -> usize {
    DEFAULT_MAX_CHARS
}

fn default_min_answer() -> usize {
    DEFAULT_MIN_ANSWER_CHARS
}

impl CleaningConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        let text = std::fs::read_to_string(path).map_err(|e| PreprocessError::Config {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|reason| PreprocessError::Config {
            path: path.display().to_string(),
            reason,
        })
    }

    pub fn rule_list(&self) -> Result<RuleList, PreprocessError> {
        RuleList::new(self.rules.clone())
    }
}

/// What cleaning did to one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanLogEntry {
    pub qa_id: String,
    pub replacements: usize,
    pub truncated_chars: usize,
}

/// Automatic cleaning of both sides, truncation, and review flags for one QA.
/// The log entry is `None` when the record came through unchanged.
pub fn clean_qa(
    qa: &QaPair,
    rules: &RuleList,
    config: &CleaningConfig,
) -> Result<(QaPair, Option<CleanLogEntry>, Vec<ReviewFlag>), PreprocessError> {
    let (question, rq) = auto_clean_counted(&qa.question, rules);
    let (answer, ra) = auto_clean_counted(&qa.answer, rules);
    let cleaned = QaPair {
        question,
        answer,
        ..qa.clone()
    };
    let before = cleaned.char_len();
    let truncated = truncate_qa(&cleaned, config.max_chars, config.min_answer_chars)?;
    let truncated_chars = before - truncated.char_len();

    let mut flags = flag_manual_review(&qa.id, &truncated.question, &config.watch_terms);
    let offset = truncated.question.chars().count();
    // Answer spans are reported after the question, as if the two were one text.
    flags.extend(
        flag_manual_review(&qa.id, &truncated.answer, &config.watch_terms)
            .into_iter()
            .map(|mut f| {
                f.span_start += offset;
                f.span_end += offset;
                f
            }),
    );

    let log = (rq + ra > 0 || truncated_chars > 0).then(|| CleanLogEntry {
        qa_id: qa.id.clone(),
        replacements: rq + ra,
        truncated_chars,
    });
    Ok((truncated, log, flags))
}
