//! Generation prompts (`standard`, `standardT`, `smile`) and the topic set.
//!
//! Templates are plain UTF-8 text with `{{name}}` placeholders. Recognized
//! names are `topic`, `topic_definition`, `question`, `answer`, and for the
//! topic-annotation template `topics` and `dialogue`.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::QaPair;
use crate::rng::SeededRng;

pub use crate::dialogue::Method;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topic {
    pub name: String,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopicFile", into = "TopicFile")]
pub struct TopicSet {
    topics: Vec<Topic>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TopicFile {
    topics: Vec<Topic>,
}

impl TryFrom<TopicFile> for TopicSet {
    type Error = PromptError;

    fn try_from(f: TopicFile) -> Result<Self, Self::Error> {
        TopicSet::new(f.topics)
    }
}

impl From<TopicSet> for TopicFile {
    fn from(s: TopicSet) -> Self {
        TopicFile { topics: s.topics }
    }
}

impl TopicSet {
    pub fn new(topics: Vec<Topic>) -> Result<Self, PromptError> {
        if topics.is_empty() {
            return Err(PromptError::EmptyTopicSet);
        }
        let mut seen = HashSet::new();
        for t in &topics {
            if !seen.insert(t.name.as_str()) {
                return Err(PromptError::DuplicateTopic(t.name.clone()));
            }
        }
        Ok(Self { topics })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|e| PromptError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| PromptError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Topic> {
        self.topics.iter().find(|t| t.name == name)
    }

    /// Case-insensitive lookup returning the canonical entry.
    pub fn resolve(&self, name: &str) -> Option<&Topic> {
        let name = name.trim();
        self.get(name)
            .or_else(|| self.topics.iter().find(|t| t.name.eq_ignore_ascii_case(name)))
    }
}

/// Uniform draw from the set with a per-call seed.
pub fn sample_topic(set: &TopicSet, seed: u64) -> &Topic {
    let mut rng = SeededRng::new(seed);
    &set.topics[rng.index(set.topics.len())]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template is empty")]
    EmptyTemplate,
    #[error("template placeholder `{{{{{0}}}}}` is not allowed here")]
    UnexpectedPlaceholder(String),
    #[error("template needs exactly one `{{{{{name}}}}}` placeholder, found {found}")]
    PlaceholderCount { name: &'static str, found: usize },
    #[error("QA `{qa_id}` has an empty {field}")]
    EmptyQaField { qa_id: String, field: &'static str },
    #[error("QA `{qa_id}` is {chars} characters, over the {budget}-character budget")]
    QaOverBudget { qa_id: String, chars: usize, budget: usize },
    #[error("topic set is empty")]
    EmptyTopicSet,
    #[error("duplicate topic name `{0}`")]
    DuplicateTopic(String),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    segments: Vec<Segment>,
}

impl Template {
    pub fn parse(text: &str) -> Self {
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut rest = text;
        while let Some(open) = rest.find("{{") {
            let after = &rest[open + 2..];
            match after.find("}}") {
                Some(close) if is_slot_name(&after[..close]) => {
                    literal.push_str(&rest[..open]);
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    segments.push(Segment::Slot(after[..close].to_string()));
                    rest = &after[close + 2..];
                }
                _ => {
                    literal.push_str(&rest[..open + 2]);
                    rest = after;
                }
            }
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Self { segments }
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot(n) => Some(n.as_str()),
            Segment::Literal(_) => None,
        })
    }

    pub fn count(&self, name: &str) -> usize {
        self.placeholders().filter(|p| *p == name).count()
    }

    fn check(&self, required_once: &[&'static str], optional: &[&str]) -> Result<(), PromptError> {
        for p in self.placeholders() {
            if !required_once.contains(&p) && !optional.contains(&p) {
                return Err(PromptError::UnexpectedPlaceholder(p.to_string()));
            }
        }
        for &name in required_once {
            let found = self.count(name);
            if found != 1 {
                return Err(PromptError::PlaceholderCount { name, found });
            }
        }
        Ok(())
    }

    /// Substitutes each slot via `fill`; unknown slots are left verbatim.
    pub fn render(&self, fill: impl Fn(&str) -> Option<String>) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Literal(t) => out.push_str(t),
                Segment::Slot(n) => match fill(n) {
                    Some(v) => out.push_str(&v),
                    None => {
                        out.push_str("{{");
                        out.push_str(n);
                        out.push_str("}}");
                    }
                },
            }
        }
        out
    }
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c == '_')
}

/// A ready-to-send generation prompt. Fields are fixed at construction so
/// the method always agrees with which inputs are present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptText {
    method: Method,
    body: String,
    topic: Option<Topic>,
    seed_qa_id: Option<String>,
}

impl PromptText {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn topic(&self) -> Option<&Topic> {
        self.topic.as_ref()
    }

    pub fn seed_qa_id(&self) -> Option<&str> {
        self.seed_qa_id.as_deref()
    }
}

pub fn build_standard_prompt(template: &str) -> Result<PromptText, PromptError> {
    if template.trim().is_empty() {
        return Err(PromptError::EmptyTemplate);
    }
    Template::parse(template).check(&[], &[])?;
    Ok(PromptText {
        method: Method::Standard,
        body: template.to_string(),
        topic: None,
        seed_qa_id: None,
    })
}

pub fn build_standardt_prompt(template: &str, topic: &Topic) -> Result<PromptText, PromptError> {
    if template.trim().is_empty() {
        return Err(PromptError::EmptyTemplate);
    }
    let t = Template::parse(template);
    t.check(&["topic"], &["topic_definition"])?;
    let body = t.render(|slot| match slot {
        "topic" => Some(topic.name.clone()),
        "topic_definition" => Some(topic.definition.clone()),
        _ => None,
    });
    Ok(PromptText {
        method: Method::StandardT,
        body,
        topic: Some(topic.clone()),
        seed_qa_id: None,
    })
}

/// Default QA length budget for rewriting prompts, in characters.
pub const DEFAULT_QA_BUDGET: usize = 1800;

pub fn build_smile_prompt(template: &str, qa: &QaPair, qa_budget: usize) -> Result<PromptText, PromptError> {
    if template.trim().is_empty() {
        return Err(PromptError::EmptyTemplate);
    }
    let t = Template::parse(template);
    t.check(&["question", "answer"], &[])?;
    if qa.question.trim().is_empty() {
        return Err(PromptError::EmptyQaField { qa_id: qa.id.clone(), field: "question" });
    }
    if qa.answer.trim().is_empty() {
        return Err(PromptError::EmptyQaField { qa_id: qa.id.clone(), field: "answer" });
    }
    let chars = qa.char_len();
    if chars > qa_budget {
        return Err(PromptError::QaOverBudget { qa_id: qa.id.clone(), chars, budget: qa_budget });
    }
    let body = t.render(|slot| match slot {
        "question" => Some(qa.question.clone()),
        "answer" => Some(qa.answer.clone()),
        _ => None,
    });
    Ok(PromptText {
        method: Method::Smile,
        body,
        topic: None,
        seed_qa_id: Some(qa.id.clone()),
    })
}

/// Topic-annotation prompt: `{{topics}}` receives one `name: definition`
/// line per topic, `{{dialogue}}` the dialogue text.
pub fn build_annotation_prompt(template: &str, set: &TopicSet, dialogue: &str) -> Result<String, PromptError> {
    if template.trim().is_empty() {
        return Err(PromptError::EmptyTemplate);
    }
    let t = Template::parse(template);
    t.check(&["dialogue"], &["topics"])?;
    let listing = set
        .topics()
        .iter()
        .map(|t| format!("- {}: {}", t.name, t.definition))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(t.render(|slot| match slot {
        "topics" => Some(listing.clone()),
        "dialogue" => Some(dialogue.to_string()),
        _ => None,
    }))
}
