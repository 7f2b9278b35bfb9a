use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::dialogue::{render_dialogue, Dialogue, MarkerConfig};
use crate::genclient::{GenError, GenParams};
use crate::promptgen::{build_annotation_prompt, TopicSet};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Only names from the topic set are kept.
    Limited,
    /// Any label the annotator produces is kept.
    Unlimited,
}

impl fmt::Display for LabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelMode::Limited => "limited",
            LabelMode::Unlimited => "unlimited",
        })
    }
}

impl FromStr for LabelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "limited" => Ok(LabelMode::Limited),
            "unlimited" => Ok(LabelMode::Unlimited),
            other => Err(format!("unknown label mode `{other}` (expected limited or unlimited)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicLabeling {
    pub dialogue_id: String,
    pub topics: Vec<String>,
    pub mode: LabelMode,
}

/// Shannon entropy in bits of the label-occurrence distribution: every
/// topic name in every labeling counts once.
pub fn topic_entropy<S: Scalar>(labelings: &[TopicLabeling]) -> Result<S, AnalysisError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for name in labelings.iter().flat_map(|l| &l.topics) {
        *counts.entry(name.as_str()).or_default() += 1;
    }
    entropy_of_counts(counts.into_values())
}

/// Entropy in bits of the distribution proportional to `counts`. Zero
/// counts are ignored.
pub fn entropy_of_counts<S: Scalar>(counts: impl IntoIterator<Item = usize>) -> Result<S, AnalysisError> {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(AnalysisError::EmptyLabelings);
    }
    let total = S::from_usize_lossy(total);
    // p * log2(1/p) keeps the degenerate case at +0 rather than -0.
    Ok(counts
        .iter()
        .map(|&c| {
            let p = S::from_usize_lossy(c) / total;
            p * p.recip().log2()
        })
        .sum())
}

/// Splits annotator output into candidate labels. Accepts comma, enumeration
/// comma, semicolon and newline separators in either width, strips list
/// bullets and quoting, and removes duplicates keeping first occurrence.
pub fn parse_topic_list(output: &str) -> Vec<String> {
    let mut body = output.trim();
    for prefix in ["话题：", "话题:", "主题：", "主题:", "topics:", "Topics:", "topic:", "Topic:"] {
        if let Some(rest) = body.strip_prefix(prefix) {
            body = rest;
            break;
        }
    }
    let mut out: Vec<String> = Vec::new();
    for piece in body.split([',', '，', '、', ';', '；', '\n']) {
        let label = piece
            .trim()
            .trim_start_matches(|c: char| c.is_ascii_digit() || matches!(c, '.' | ')' | '-' | '*' | '•' | '．'))
            .trim_matches(|c: char| {
                c.is_whitespace() || matches!(c, '"' | '\'' | '“' | '”' | '「' | '」' | '[' | ']' | '【' | '】' | '。' | '.')
            });
        if !label.is_empty() && !out.iter().any(|l| l == label) {
            out.push(label.to_string());
        }
    }
    out
}

/// Asks `annotator` for the topics of `d`, retrying up to `max_attempts`
/// times while the reply contains no labels at all. Annotator failures are
/// returned immediately; the annotator is expected to do its own transport
/// retries.
pub fn label_topics<F>(
    d: &Dialogue,
    set: &TopicSet,
    mode: LabelMode,
    template: &str,
    annotator: F,
    params: &GenParams,
    max_attempts: u32,
) -> Result<TopicLabeling, AnalysisError>
where
    F: Fn(&str, &GenParams) -> Result<String, GenError>,
{
    let prompt = build_annotation_prompt(template, set, &render_dialogue(&d.utterances, &MarkerConfig::default()))?;
    let attempts = max_attempts.max(1);
    for _ in 0..attempts {
        let labels = parse_topic_list(&annotator(&prompt, params)?);
        if labels.is_empty() {
            continue;
        }
        let mut topics: Vec<String> = Vec::with_capacity(labels.len());
        for label in labels {
            let name = match (set.resolve(&label), mode) {
                (Some(t), _) => t.name.clone(),
                (None, LabelMode::Unlimited) => label,
                (None, LabelMode::Limited) => {
                    log::warn!("dialogue {}: dropping out-of-set topic `{label}`", d.id);
                    continue;
                }
            };
            if !topics.contains(&name) {
                topics.push(name);
            }
        }
        return Ok(TopicLabeling {
            dialogue_id: d.id.clone(),
            topics,
            mode,
        });
    }
    Err(AnalysisError::UnparseableAnnotation {
        dialogue_id: d.id.clone(),
        attempts,
    })
}
