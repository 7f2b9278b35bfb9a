use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::provider::{EmbeddingBackend, EmbeddingRequest};
use super::{AuditRecord, EmbeddingVector, GenError, RecordSink, RetryPolicy, TokenBucket};

/// Embedding client. Results are cached by exact input text, so repeated
/// calls within one session return bitwise-identical vectors.
pub struct Embedder {
    backend: Arc<dyn EmbeddingBackend>,
    model: String,
    dimension: usize,
    max_chars: usize,
    retry: RetryPolicy,
    limiter: Option<Arc<TokenBucket>>,
    audit: Arc<RecordSink<AuditRecord>>,
    cache: Mutex<HashMap<String, EmbeddingVector<f64>>>,
}

impl Embedder {
    pub fn new(backend: Arc<dyn EmbeddingBackend>, model: impl Into<String>, dimension: usize, max_chars: usize) -> Self {
        Self {
            backend,
            model: model.into(),
            dimension,
            max_chars,
            retry: RetryPolicy::default(),
            limiter: None,
            audit: Arc::default(),
            cache: Mutex::default(),
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

    pub fn with_audit(mut self, audit: Arc<RecordSink<AuditRecord>>) -> Self {
        self.audit = audit;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector<f64>, GenError> {
        if text.trim().is_empty() {
            return Err(GenError::EmptyEmbeddingInput);
        }
        let chars = text.chars().count();
        if chars > self.max_chars {
            return Err(GenError::EmbeddingOverLength { chars, max: self.max_chars });
        }
        if let Some(hit) = self.cache.lock().expect("embedding cache poisoned").get(text) {
            return Ok(hit.clone());
        }

        let request = EmbeddingRequest {
            model: self.model.clone(),
            input: text.to_string(),
        };
        let max = self.retry.max_attempts.max(1);
        let mut attempt = 1;
        let values = loop {
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            let result = self.backend.embed(&request);
            self.audit.push(AuditRecord {
                prompt_id: String::new(),
                attempt_index: attempt,
                endpoint: "embeddings".into(),
                request: serde_json::to_value(&request).unwrap_or_default(),
                response: result.as_ref().ok().map(|v| format!("<{} floats>", v.len())),
                error: result.as_ref().err().map(|e| e.to_string()),
            });
            match result {
                Ok(v) => break v,
                Err(e) if e.is_retriable() && attempt < max => {
                    attempt += 1;
                    std::thread::sleep(self.retry.delay_before(attempt));
                }
                Err(e) => return Err(e.into()),
            }
        };
        if values.len() != self.dimension {
            return Err(GenError::DimensionMismatch {
                declared: self.dimension,
                received: values.len(),
            });
        }
        let vector = EmbeddingVector::new(values, self.model.clone())?;
        let mut cache = self.cache.lock().expect("embedding cache poisoned");
        Ok(cache.entry(text.to_string()).or_insert(vector).clone())
    }
}
