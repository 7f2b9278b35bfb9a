use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bertscore, bleu_n, distinct_responses, meteor, rouge_l, tokenize_chars, BertScoreMode, EvalError, MeteorParams, TokenEmbedder};
use crate::dialogue::Utterance;

/// One test case: a dialogue history, the reference supporter reply and the
/// replies of each system under evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub case_id: String,
    pub history: Vec<Utterance>,
    pub reference: String,
    #[serde(default)]
    pub candidates: BTreeMap<String, String>,
}

impl EvalCase {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |reason: &str| EvalError::InvalidCase {
            case_id: self.case_id.clone(),
            reason: reason.into(),
        };
        if self.history.is_empty() {
            return Err(bad("history is empty"));
        }
        if self.reference.trim().is_empty() {
            return Err(bad("reference is empty"));
        }
        Ok(())
    }

    pub fn response(&self, system: &str) -> Result<&str, EvalError> {
        self.candidates
            .get(system)
            .map(String::as_str)
            .filter(|r| !r.trim().is_empty())
            .ok_or_else(|| EvalError::MissingResponse {
                case_id: self.case_id.clone(),
                system: system.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub bleu_smoothing: Option<f64>,
    pub rouge_beta: f64,
    pub meteor: MeteorParams,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            bleu_smoothing: None,
            rouge_beta: 1.0,
            meteor: MeteorParams::default(),
        }
    }
}

/// Sentence-level scores of one response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseScores {
    pub meteor: f64,
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub rouge_l: f64,
    pub bertscore: f64,
    pub bertscore_mode: BertScoreMode,
}

pub fn score_case(candidate: &str, reference: &str, embedder: &dyn TokenEmbedder, config: &MetricConfig) -> Result<CaseScores, EvalError> {
    let c = tokenize_chars(candidate);
    let r = tokenize_chars(reference);
    if c.is_empty() {
        return Err(EvalError::EmptyInput("candidate"));
    }
    let b = bertscore(candidate, reference, embedder)?;
    Ok(CaseScores {
        meteor: meteor(&c, &r, &config.meteor)?,
        bleu_1: bleu_n(&c, &r, 1, config.bleu_smoothing)?,
        bleu_2: bleu_n(&c, &r, 2, config.bleu_smoothing)?,
        bleu_3: bleu_n(&c, &r, 3, config.bleu_smoothing)?,
        rouge_l: rouge_l(&c, &r, config.rouge_beta)?,
        bertscore: b.f1,
        bertscore_mode: b.mode,
    })
}

/// Scores of one system. Reference-based metrics are means of sentence-level
/// scores; distinct-n is pooled over all of the system's responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub system: String,
    pub cases: usize,
    pub meteor: f64,
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub rouge_l: f64,
    pub distinct_1: f64,
    pub distinct_2: f64,
    pub distinct_3: f64,
    pub bertscore: f64,
    pub bertscore_mode: BertScoreMode,
    pub bleu_aggregation: String,
}

impl ScoreRow {
    fn metrics(&self) -> [f64; 9] {
        [
            self.meteor,
            self.bleu_1,
            self.bleu_2,
            self.bleu_3,
            self.rouge_l,
            self.distinct_1,
            self.distinct_2,
            self.distinct_3,
            self.bertscore,
        ]
    }

    /// Copy with every metric rounded to two decimals, for reports.
    pub fn rounded(&self) -> ScoreRow {
        let r = |x: f64| (x * 100.0).round() / 100.0;
        ScoreRow {
            meteor: r(self.meteor),
            bleu_1: r(self.bleu_1),
            bleu_2: r(self.bleu_2),
            bleu_3: r(self.bleu_3),
            rouge_l: r(self.rouge_l),
            distinct_1: r(self.distinct_1),
            distinct_2: r(self.distinct_2),
            distinct_3: r(self.distinct_3),
            bertscore: r(self.bertscore),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

const HEADERS: [&str; 9] = ["METEOR", "BLEU-1", "BLEU-2", "BLEU-3", "Rouge-L", "D-1", "D-2", "D-3", "BERTScore"];

impl fmt::Display for ScoreTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_w = self.rows.iter().map(|r| r.system.chars().count()).chain([6]).max().unwrap_or(6);
        write!(f, "{:<name_w$}", "System")?;
        for h in HEADERS {
            write!(f, " {h:>9}")?;
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "{:<name_w$}", row.system)?;
            for v in row.metrics() {
                write!(f, " {v:>9.2}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Scores `system` over all cases. Cases are scored in parallel; the
/// averages are summed in case order so results are reproducible.
pub fn evaluate(cases: &[EvalCase], system: &str, embedder: &dyn TokenEmbedder, config: &MetricConfig) -> Result<ScoreRow, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::EmptyInput("cases"));
    }
    let responses: Vec<&str> = cases
        .iter()
        .map(|c| {
            c.validate()?;
            c.response(system)
        })
        .collect::<Result<_, _>>()?;
    let scores: Vec<CaseScores> = cases
        .par_iter()
        .zip(responses.par_iter())
        .map(|(c, resp)| score_case(resp, &c.reference, embedder, config))
        .collect::<Result<_, _>>()?;
    let n = scores.len() as f64;
    let avg = |f: fn(&CaseScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let bertscore_mode = if scores.iter().all(|s| s.bertscore_mode == BertScoreMode::Tokens) {
        BertScoreMode::Tokens
    } else {
        BertScoreMode::WholeText
    };
    Ok(ScoreRow {
        system: system.to_string(),
        cases: cases.len(),
        meteor: avg(|s| s.meteor),
        bleu_1: avg(|s| s.bleu_1),
        bleu_2: avg(|s| s.bleu_2),
        bleu_3: avg(|s| s.bleu_3),
        rouge_l: avg(|s| s.rouge_l),
        distinct_1: distinct_responses(&responses, 1)?,
        distinct_2: distinct_or_zero(&responses, 2)?,
        distinct_3: distinct_or_zero(&responses, 3)?,
        bertscore: avg(|s| s.bertscore),
        bertscore_mode,
        bleu_aggregation: "sentence".into(),
    })
}

/// Very short response sets can have no bigrams or trigrams at all; the
/// table reports 0 there instead of failing the whole evaluation.
fn distinct_or_zero(responses: &[&str], n: usize) -> Result<f64, EvalError> {
    match distinct_responses(responses, n) {
        Err(EvalError::EmptyInput(_)) => Ok(0.0),
        other => other,
    }
}

pub fn evaluate_all(cases: &[EvalCase], systems: &[&str], embedder: &dyn TokenEmbedder, config: &MetricConfig) -> Result<ScoreTable, EvalError> {
    let rows = systems
        .iter()
        .map(|s| evaluate(cases, s, embedder, config))
        .collect::<Result<_, _>>()?;
    Ok(ScoreTable { rows })
}
