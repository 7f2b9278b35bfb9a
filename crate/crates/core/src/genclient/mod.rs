//! Chat-completion and embedding clients with bounded retry, pacing and an
//! audit trail of every provider exchange.

mod embed;
pub mod mock;
pub mod mock_server;
pub mod provider;
mod ratelimit;

use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{Dialogue, FilterVerdict, RejectReason, Utterance};
use crate::promptgen::PromptText;
use crate::scalar::Scalar;

pub use embed::Embedder;
pub use provider::{ChatBackend, ChatMessage, ChatRequest, EmbeddingBackend, EmbeddingRequest, HttpBackend, TransportError};
pub use ratelimit::TokenBucket;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u32,
    pub model_name: String,
}

pub const DEFAULT_CHAT_MODEL: &str = "gpt-3.5-turbo-0613";
pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-ada-002";
pub const DEFAULT_EMBEDDING_DIMENSION: usize = 1536;
pub const DEFAULT_EMBEDDING_MAX_CHARS: usize = 8191;
/// Room for one complete dialogue in the reply.
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;

impl GenParams {
    /// Sampling defaults for dialogue synthesis.
    pub fn synthesis(model_name: impl Into<String>) -> Self {
        Self {
            temperature: 1.0,
            top_p: 1.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            model_name: model_name.into(),
        }
    }

    /// Sampling defaults for the topic annotator.
    pub fn annotation(model_name: impl Into<String>) -> Self {
        Self {
            temperature: 0.7,
            top_p: 0.8,
            max_output_tokens: 256,
            model_name: model_name.into(),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |reason: &str| Err(GenError::InvalidParams(reason.to_string()));
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be a finite value >= 0");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must lie in (0, 1]");
        }
        if self.max_output_tokens == 0 {
            return bad("max_output_tokens must be positive");
        }
        if self.model_name.trim().is_empty() {
            return bad("model_name is empty");
        }
        Ok(())
    }
}

impl Default for GenParams {
    fn default() -> Self {
        Self::synthesis(DEFAULT_CHAT_MODEL)
    }
}

/// A text embedding of fixed dimension with finite components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector<S> {
    values: Vec<S>,
    model_name: String,
}

impl<S: Scalar> EmbeddingVector<S> {
    pub fn new(values: Vec<S>, model_name: impl Into<String>) -> Result<Self, GenError> {
        if values.is_empty() {
            return Err(GenError::InvalidEmbedding("embedding has no components".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GenError::InvalidEmbedding(format!("component {i} is not finite")));
        }
        Ok(Self {
            values,
            model_name: model_name.into(),
        })
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn norm(&self) -> S {
        self.values.iter().map(|&v| v * v).sum::<S>().sqrt()
    }

    pub fn cast<T: Scalar>(&self) -> EmbeddingVector<T> {
        EmbeddingVector {
            values: self.values.iter().map(|v| T::from_f64_lossy(v.to_f64_lossy())).collect(),
            model_name: self.model_name.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Accepted,
    FormatReject,
    TurnsReject,
    TransportError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationAttemptLog {
    pub prompt_id: String,
    pub attempt_index: u32,
    pub outcome: AttemptOutcome,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<RejectReason>,
}

/// One provider exchange as sent and received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub prompt_id: String,
    pub attempt_index: u32,
    pub endpoint: String,
    pub request: serde_json::Value,
    #[serde(default)]
    pub response: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
}

/// Append-only, thread-safe record collector.
#[derive(Debug)]
pub struct RecordSink<T> {
    records: Mutex<Vec<T>>,
}

impl<T> Default for RecordSink<T> {
    fn default() -> Self {
        Self {
            records: Mutex::new(Vec::new()),
        }
    }
}

impl<T: Clone> RecordSink<T> {
    pub fn push(&self, record: T) {
        self.records.lock().expect("record sink poisoned").push(record);
    }

    pub fn snapshot(&self) -> Vec<T> {
        self.records.lock().expect("record sink poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("record sink poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl RecordSink<GenerationAttemptLog> {
    /// Entries ordered by (prompt id, attempt), independent of completion order.
    pub fn sorted(&self) -> Vec<GenerationAttemptLog> {
        let mut v = self.snapshot();
        v.sort_by(|a, b| (&a.prompt_id, a.attempt_index).cmp(&(&b.prompt_id, b.attempt_index)));
        v
    }
}

impl RecordSink<AuditRecord> {
    pub fn sorted(&self) -> Vec<AuditRecord> {
        let mut v = self.snapshot();
        v.sort_by(|a, b| {
            (&a.endpoint, &a.prompt_id, a.attempt_index).cmp(&(&b.endpoint, &b.prompt_id, b.attempt_index))
        });
        v
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("prompt is {chars} characters, over the {budget}-character context budget")]
    ContextOverflow { chars: usize, budget: usize },
    #[error("text is {chars} characters, over the {max}-character embedding limit")]
    EmbeddingOverLength { chars: usize, max: usize },
    #[error("cannot embed empty text")]
    EmptyEmbeddingInput,
    #[error("embedding dimension mismatch: configured {declared}, provider returned {received}")]
    DimensionMismatch { declared: usize, received: usize },
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("provider call failed: {0}")]
    Transport(#[from] TransportError),
    #[error("prompt `{prompt_id}` exhausted {} attempts without an acceptable dialogue", .attempts.len())]
    Exhausted {
        prompt_id: String,
        attempts: Vec<GenerationAttemptLog>,
    },
}

impl GenError {
    /// Failures that come from the provider rather than from local input.
    pub fn is_provider_failure(&self) -> bool {
        matches!(self, GenError::Transport(_) | GenError::Exhausted { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

pub const DEFAULT_MAX_ATTEMPTS: u32 = 5;

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Exponential backoff before attempt `next_attempt` (2-based).
    pub fn delay_before(&self, next_attempt: u32) -> Duration {
        let exp = next_attempt.saturating_sub(2).min(16);
        self.base_delay.saturating_mul(1 << exp).min(self.max_delay)
    }
}

/// Acceptance check for a raw generation; `Err` carries the rejection verdict.
pub type Validator<'a> = dyn Fn(&str) -> Result<Vec<Utterance>, FilterVerdict> + Sync + 'a;

pub struct GenClient {
    backend: Arc<dyn ChatBackend>,
    limiter: Option<Arc<TokenBucket>>,
    retry: RetryPolicy,
    context_budget_chars: usize,
    attempts: Arc<RecordSink<GenerationAttemptLog>>,
    audit: Arc<RecordSink<AuditRecord>>,
}

/// gpt-3.5-turbo's 4096-token window, counted as characters.
pub const DEFAULT_CONTEXT_BUDGET_CHARS: usize = 4096;

impl GenClient {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            backend,
            limiter: None,
            retry: RetryPolicy::default(),
            context_budget_chars: DEFAULT_CONTEXT_BUDGET_CHARS,
            attempts: Arc::default(),
            audit: Arc::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_rate_limit(mut self, limiter: Arc<TokenBucket>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    pub fn with_context_budget(mut self, chars: usize) -> Self {
        self.context_budget_chars = chars;
        self
    }

    pub fn with_audit(mut self, audit: Arc<RecordSink<AuditRecord>>) -> Self {
        self.audit = audit;
        self
    }

    pub fn attempt_log(&self) -> &Arc<RecordSink<GenerationAttemptLog>> {
        &self.attempts
    }

    pub fn audit_log(&self) -> &Arc<RecordSink<AuditRecord>> {
        &self.audit
    }

    fn request(&self, prompt_id: &str, body: &str, params: &GenParams) -> ChatRequest {
        ChatRequest {
            model: params.model_name.clone(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: body.to_string(),
            }],
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_output_tokens,
            user: Some(prompt_id.to_string()),
        }
    }

    fn preflight(&self, body: &str, params: &GenParams) -> Result<(), GenError> {
        params.validate()?;
        let chars = body.chars().count();
        if chars > self.context_budget_chars {
            return Err(GenError::ContextOverflow {
                chars,
                budget: self.context_budget_chars,
            });
        }
        Ok(())
    }

    /// One provider call, paced and audited.
    fn call_once(&self, prompt_id: &str, attempt_index: u32, request: &ChatRequest) -> Result<String, TransportError> {
        if let Some(l) = &self.limiter {
            l.acquire();
        }
        let result = self.backend.chat(request);
        self.audit.push(AuditRecord {
            prompt_id: prompt_id.to_string(),
            attempt_index,
            endpoint: "chat/completions".into(),
            request: serde_json::to_value(request).unwrap_or_default(),
            response: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(|e| e.to_string()),
        });
        result
    }

    fn log(&self, prompt_id: &str, attempt_index: u32, outcome: AttemptOutcome, raw_text: String, reasons: Vec<RejectReason>) {
        self.attempts.push(GenerationAttemptLog {
            prompt_id: prompt_id.to_string(),
            attempt_index,
            outcome,
            raw_text,
            reasons,
        });
    }

    /// Sends a prompt and returns the reply text, retrying retriable
    /// transport failures up to the policy's attempt limit.
    pub fn chat_complete(&self, prompt_id: &str, prompt: &PromptText, params: &GenParams) -> Result<String, GenError> {
        self.complete_text(prompt_id, prompt.body(), params)
    }

    pub fn complete_text(&self, prompt_id: &str, body: &str, params: &GenParams) -> Result<String, GenError> {
        self.preflight(body, params)?;
        let request = self.request(prompt_id, body, params);
        let max = self.retry.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match self.call_once(prompt_id, attempt, &request) {
                Ok(text) => {
                    self.log(prompt_id, attempt, AttemptOutcome::Accepted, text.clone(), vec![]);
                    return Ok(text);
                }
                Err(e) => {
                    self.log(prompt_id, attempt, AttemptOutcome::TransportError, e.to_string(), vec![]);
                    if !e.is_retriable() || attempt >= max {
                        return Err(e.into());
                    }
                }
            }
            attempt += 1;
            std::thread::sleep(self.retry.delay_before(attempt));
        }
    }

    /// Regenerates until `validator` accepts a reply or `max_attempts`
    /// provider calls have been made. Each call, including failed
    /// transport attempts, counts against the limit.
    pub fn generate_with_retry(
        &self,
        prompt_id: &str,
        prompt: &PromptText,
        params: &GenParams,
        validator: &Validator<'_>,
        max_attempts: u32,
    ) -> Result<Dialogue, GenError> {
        self.preflight(prompt.body(), params)?;
        let request = self.request(prompt_id, prompt.body(), params);
        let max = max_attempts.max(1);
        let mut mine = Vec::new();
        for attempt in 1..=max {
            if attempt > 1 {
                std::thread::sleep(self.retry.delay_before(attempt));
            }
            let entry = match self.call_once(prompt_id, attempt, &request) {
                Err(e) => {
                    let fatal = !e.is_retriable();
                    let entry = GenerationAttemptLog {
                        prompt_id: prompt_id.to_string(),
                        attempt_index: attempt,
                        outcome: AttemptOutcome::TransportError,
                        raw_text: e.to_string(),
                        reasons: vec![],
                    };
                    if fatal {
                        self.attempts.push(entry);
                        return Err(e.into());
                    }
                    entry
                }
                Ok(raw) => match validator(&raw) {
                    Ok(utterances) => {
                        self.log(prompt_id, attempt, AttemptOutcome::Accepted, raw, vec![]);
                        return Ok(Dialogue {
                            id: prompt_id.to_string(),
                            method: prompt.method(),
                            seed_qa_id: prompt.seed_qa_id().map(str::to_string),
                            topic: prompt.topic().map(|t| t.name.clone()),
                            utterances,
                        });
                    }
                    Err(verdict) => {
                        let turns_only = verdict.reasons.iter().all(|r| *r == RejectReason::TooFewTurns);
                        GenerationAttemptLog {
                            prompt_id: prompt_id.to_string(),
                            attempt_index: attempt,
                            outcome: if turns_only { AttemptOutcome::TurnsReject } else { AttemptOutcome::FormatReject },
                            raw_text: raw,
                            reasons: verdict.reasons.into_iter().collect(),
                        }
                    }
                },
            };
            self.attempts.push(entry.clone());
            mine.push(entry);
        }
        Err(GenError::Exhausted {
            prompt_id: prompt_id.to_string(),
            attempts: mine,
        })
    }
}
