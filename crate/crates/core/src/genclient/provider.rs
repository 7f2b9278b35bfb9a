//! Provider wire protocol: chat-completions and embeddings over HTTP.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Caller-side request key; the mock provider scripts replies per key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<String>,
}

impl ChatRequest {
    pub fn last_user_content(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == "user")
            .map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Deserialize, Serialize)]
pub(crate) struct ChatResponse {
    pub choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize, Serialize)]
pub(crate) struct ChatChoice {
    #[serde(default)]
    pub index: usize,
    pub message: ChatMessage,
    #[serde(default)]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRequest {
    pub model: String,
    pub input: String,
}

#[derive(Debug, Deserialize, Serialize)]
pub(crate) struct EmbeddingResponse {
    pub data: Vec<EmbeddingDatum>,
    #[serde(default)]
    pub model: String,
}

#[derive(Debug, Deserialize, Serialize)]
pub(crate) struct EmbeddingDatum {
    pub embedding: Vec<f64>,
    #[serde(default)]
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("provider returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected provider response: {0}")]
    Decode(String),
}

impl TransportError {
    /// Connection failures, rate limiting and server-side errors are retried;
    /// other client errors (bad key, bad request) are not.
    pub fn is_retriable(&self) -> bool {
        match self {
            TransportError::Connect(_) => true,
            TransportError::Status { status, .. } => *status == 408 || *status == 429 || *status >= 500,
            TransportError::Decode(_) => false,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

pub trait EmbeddingBackend: Send + Sync {
    fn embed(&self, request: &EmbeddingRequest) -> Result<Vec<f64>, TransportError>;
}

/// Blocking client for an OpenAI-compatible endpoint such as
/// `https://api.openai.com/v1`.
pub struct HttpBackend {
    base_url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

pub const ENV_BASE_URL: &str = "OPENAI_BASE_URL";
pub const ENV_API_KEY: &str = "OPENAI_API_KEY";

impl HttpBackend {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            agent,
        }
    }

    /// Endpoint from `OPENAI_BASE_URL` (default `https://api.openai.com/v1`),
    /// key from `OPENAI_API_KEY`.
    pub fn from_env(timeout: Duration) -> Self {
        let base = std::env::var(ENV_BASE_URL).unwrap_or_else(|_| "https://api.openai.com/v1".to_string());
        Self::new(base, std::env::var(ENV_API_KEY).ok(), timeout)
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post<T: Serialize>(&self, path: &str, body: &T) -> Result<String, TransportError> {
        let url = format!("{}/{}", self.base_url, path);
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| TransportError::Connect(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Connect(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(TransportError::Status { status, body: text });
        }
        Ok(text)
    }
}

impl ChatBackend for HttpBackend {
    fn chat(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let text = self.post("chat/completions", request)?;
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| TransportError::Decode(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::Decode("response has no choices".into()))
    }
}

impl EmbeddingBackend for HttpBackend {
    fn embed(&self, request: &EmbeddingRequest) -> Result<Vec<f64>, TransportError> {
        let text = self.post("embeddings", request)?;
        let parsed: EmbeddingResponse =
            serde_json::from_str(&text).map_err(|e| TransportError::Decode(e.to_string()))?;
        parsed
            .data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .ok_or_else(|| TransportError::Decode("response has no embedding".into()))
    }
}
