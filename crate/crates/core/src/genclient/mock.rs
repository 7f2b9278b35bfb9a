//! Scripted offline provider.
//!
//! A [`MockScript`] lists routes; each route matches requests whose last
//! user message contains `when_contains` (or every request when unset) and
//! plays its replies in order, separately for every request key. The key is
//! the request's `user` field when present, otherwise a hash of the prompt.
//! Once a key's replies run out, the last one repeats (or the list cycles).
//!
//! Generated dialogues are cut from the prompt text itself, and embeddings
//! are signed feature hashes of character uni- and bigrams, so rewritten
//! prompts land close to their seeds in embedding space.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::provider::{ChatBackend, ChatRequest, EmbeddingBackend, EmbeddingRequest, TransportError};
use super::DEFAULT_EMBEDDING_DIMENSION;
use crate::dialogue::MarkerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MockReply {
    Text { text: String },
    Status {
        code: u16,
        #[serde(default)]
        body: String,
    },
    /// A refusal with no role markers or line breaks.
    Malformed,
    /// A well-formed dialogue of `turns` exchanges built from the prompt.
    Dialogue { turns: usize },
    /// One option, chosen by hashing the request key.
    Choice { options: Vec<String> },
}

impl MockReply {
    pub fn text(t: impl Into<String>) -> Self {
        MockReply::Text { text: t.into() }
    }

    pub fn status(code: u16) -> Self {
        MockReply::Status { code, body: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRoute {
    #[serde(default)]
    pub when_contains: Option<String>,
    pub replies: Vec<MockReply>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AfterLast {
    #[default]
    RepeatLast,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockScript {
    pub routes: Vec<MockRoute>,
    pub after_last: AfterLast,
    pub embedding_dimension: usize,
    pub markers: MarkerConfig,
}

impl Default for MockScript {
    fn default() -> Self {
        Self {
            routes: vec![MockRoute {
                when_contains: None,
                replies: vec![MockReply::Dialogue { turns: 6 }],
            }],
            after_last: AfterLast::RepeatLast,
            embedding_dimension: DEFAULT_EMBEDDING_DIMENSION,
            markers: MarkerConfig::default(),
        }
    }
}

impl MockScript {
    pub fn sequence(replies: Vec<MockReply>) -> Self {
        Self {
            routes: vec![MockRoute { when_contains: None, replies }],
            ..Self::default()
        }
    }

    pub fn with_embedding_dimension(mut self, dimension: usize) -> Self {
        self.embedding_dimension = dimension;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub const CLOSING_LINE: &str = "不客气，希望你一切顺利，随时欢迎你再来聊聊。";
const MALFORMED_TEXT: &str = "抱歉，我现在无法完成这个请求。";
const FILLER: &str = "嗯";

#[derive(Debug)]
pub struct MockProvider {
    script: MockScript,
    cursors: Mutex<HashMap<(usize, String), usize>>,
    chat_calls: AtomicUsize,
    embedding_calls: AtomicUsize,
}

impl MockProvider {
    pub fn new(script: MockScript) -> Self {
        Self {
            script,
            cursors: Mutex::default(),
            chat_calls: AtomicUsize::new(0),
            embedding_calls: AtomicUsize::new(0),
        }
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    pub fn chat_calls(&self) -> usize {
        self.chat_calls.load(Ordering::SeqCst)
    }

    pub fn embedding_calls(&self) -> usize {
        self.embedding_calls.load(Ordering::SeqCst)
    }

    fn next_reply(&self, route_index: usize, key: &str) -> Option<MockReply> {
        let replies = &self.script.routes[route_index].replies;
        if replies.is_empty() {
            return None;
        }
        let mut cursors = self.cursors.lock().expect("mock cursors poisoned");
        let cursor = cursors.entry((route_index, key.to_string())).or_insert(0);
        let idx = match self.script.after_last {
            AfterLast::RepeatLast => (*cursor).min(replies.len() - 1),
            AfterLast::Cycle => *cursor % replies.len(),
        };
        *cursor += 1;
        Some(replies[idx].clone())
    }

    /// Reply text for a request, or the scripted failure status.
    pub fn respond(&self, request: &ChatRequest) -> Result<String, TransportError> {
        self.chat_calls.fetch_add(1, Ordering::SeqCst);
        let content = request.last_user_content();
        let key = request
            .user
            .clone()
            .unwrap_or_else(|| format!("{:016x}", fnv1a(content.as_bytes())));
        let route = self
            .script
            .routes
            .iter()
            .position(|r| r.when_contains.as_deref().is_none_or(|needle| content.contains(needle)))
            .ok_or_else(|| TransportError::Status {
                status: 404,
                body: "no mock route matches this request".into(),
            })?;
        let reply = self.next_reply(route, &key).ok_or_else(|| TransportError::Status {
            status: 500,
            body: "mock route has no replies".into(),
        })?;
        match reply {
            MockReply::Text { text } => Ok(text),
            MockReply::Status { code, body } => Err(TransportError::Status { status: code, body }),
            MockReply::Malformed => Ok(MALFORMED_TEXT.to_string()),
            MockReply::Dialogue { turns } => Ok(synthesize_dialogue(content, turns, &self.script.markers)),
            MockReply::Choice { options } => {
                if options.is_empty() {
                    return Ok(String::new());
                }
                let pick = (fnv1a(key.as_bytes()) % options.len() as u64) as usize;
                Ok(options[pick].clone())
            }
        }
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        self.embedding_calls.fetch_add(1, Ordering::SeqCst);
        hashed_embedding(text, self.script.embedding_dimension)
    }
}

impl ChatBackend for MockProvider {
    fn chat(&self, request: &ChatRequest) -> Result<String, TransportError> {
        self.respond(request)
    }
}

impl EmbeddingBackend for MockProvider {
    fn embed(&self, request: &EmbeddingRequest) -> Result<Vec<f64>, TransportError> {
        Ok(self.embed_text(&request.input))
    }
}

/// Cuts the prompt's visible text into `2 * turns - 1` utterances and closes
/// with a fixed supporter line.
pub fn synthesize_dialogue(source: &str, turns: usize, markers: &MarkerConfig) -> String {
    let mut text = source.to_string();
    for name in [&markers.help_seeker, &markers.supporter] {
        if !name.is_empty() {
            text = text.replace(name.as_str(), "");
        }
    }
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace() && !c.is_ascii_alphabetic()).collect();
    let turns = turns.max(1);
    let pieces = 2 * turns - 1;
    let mut lines = Vec::with_capacity(2 * turns);
    for i in 0..pieces {
        let (lo, hi) = (i * chars.len() / pieces, (i + 1) * chars.len() / pieces);
        let chunk: String = chars[lo..hi].iter().collect();
        let chunk = chunk.trim_start_matches(['：', ':']).to_string();
        let chunk = if chunk.is_empty() { FILLER.to_string() } else { chunk };
        let name = if i % 2 == 0 { &markers.help_seeker } else { &markers.supporter };
        lines.push(format!("{name}：{chunk}"));
    }
    lines.push(format!("{}：{}", markers.supporter, CLOSING_LINE));
    lines.join("\n")
}

/// Unit-norm signed feature hash of character unigrams and bigrams.
pub fn hashed_embedding(text: &str, dimension: usize) -> Vec<f64> {
    let dimension = dimension.max(1);
    let mut v = vec![0.0; dimension];
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut add = |feature: &str, weight: f64| {
        let h = fnv1a(feature.as_bytes());
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[(h % dimension as u64) as usize] += sign * weight;
    };
    let mut buf = [0u8; 8];
    for c in &chars {
        add(c.encode_utf8(&mut buf), 1.0);
    }
    for w in chars.windows(2) {
        let bigram: String = w.iter().collect();
        add(&bigram, 0.5);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        v[0] = 1.0;
    }
    v
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    crate::rng::splitmix64(h)
}
