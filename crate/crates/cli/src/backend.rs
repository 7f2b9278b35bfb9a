//! Provider wiring: the real HTTP endpoint or the bundled mock server.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Args;
use dialogsynth_core::genclient::mock::{MockProvider, MockReply, MockRoute, MockScript};
use dialogsynth_core::genclient::mock_server::MockServer;
use dialogsynth_core::genclient::{
    AuditRecord, Embedder, GenClient, HttpBackend, RecordSink, RetryPolicy, TokenBucket,
};
use dialogsynth_core::promptgen::TopicSet;

use crate::config::PipelineConfig;
use crate::MockArgs;

/// Phrase the shipped annotation template contains; the default mock script
/// routes requests containing it to topic answers.
pub const ANNOTATION_ROUTE: &str = "标注话题";

/// Live connection to a provider. With `--mock` the server runs in-process
/// and lives as long as this value.
pub struct Backends {
    pub client: GenClient,
    pub embedder: Embedder,
    pub audit: Arc<RecordSink<AuditRecord>>,
    _server: Option<MockServer>,
}

/// Mock script used when `--mock` is given without `--mock-script`:
/// topic answers for annotation prompts and six-turn dialogues otherwise.
pub fn default_mock_script(cfg: &PipelineConfig) -> MockScript {
    let names: Vec<String> = TopicSet::load(&cfg.paths.topics)
        .map(|s| s.topics().iter().map(|t| t.name.clone()).collect())
        .unwrap_or_default();
    let options = if names.is_empty() {
        vec!["生活琐事".to_string()]
    } else {
        (0..names.len())
            .map(|i| {
                let j = (i * 7 + 3) % names.len();
                if i % 3 == 0 || i == j {
                    names[i].clone()
                } else {
                    format!("{}，{}", names[i], names[j])
                }
            })
            .collect()
    };
    MockScript {
        routes: vec![
            MockRoute {
                when_contains: Some(ANNOTATION_ROUTE.to_string()),
                replies: vec![MockReply::Choice { options }],
            },
            MockRoute {
                when_contains: None,
                replies: vec![MockReply::Dialogue { turns: 6 }],
            },
        ],
        embedding_dimension: cfg.provider.embedding_dimension,
        markers: cfg.markers(),
        ..MockScript::default()
    }
}

pub fn load_mock_script(cfg: &PipelineConfig, path: Option<&PathBuf>) -> Result<MockScript> {
    match path {
        Some(p) => {
            let text = crate::config::read_required(p, "mock script")?;
            MockScript::from_json(&text).map_err(|e| crate::Invalid(format!("mock script {}: {e}", p.display())).into())
        }
        None => Ok(default_mock_script(cfg)),
    }
}

impl Backends {
    pub fn connect(cfg: &PipelineConfig, mock: &MockArgs) -> Result<Self> {
        let p = &cfg.provider;
        let timeout = Duration::from_secs(p.timeout_secs);
        let (http, server, retry) = if mock.enabled() {
            let script = load_mock_script(cfg, mock.mock_script.as_ref())?;
            let server = MockServer::start_local(Arc::new(MockProvider::new(script))).context("starting mock server")?;
            log::info!("mock provider listening at {}", server.base_url());
            // Nothing to back off from locally.
            let retry = RetryPolicy::no_delay(p.max_attempts);
            (HttpBackend::new(server.base_url(), None, timeout), Some(server), retry)
        } else {
            let http = match &p.base_url {
                Some(url) => HttpBackend::new(url.clone(), std::env::var(dialogsynth_core::genclient::provider::ENV_API_KEY).ok(), timeout),
                None => HttpBackend::from_env(timeout),
            };
            let retry = RetryPolicy {
                max_attempts: p.max_attempts,
                base_delay: Duration::from_millis(p.retry_base_delay_ms),
                max_delay: Duration::from_millis(p.retry_max_delay_ms),
            };
            (http, None, retry)
        };
        let http = Arc::new(http);
        let audit: Arc<RecordSink<AuditRecord>> = Arc::default();
        let limiter = p
            .requests_per_minute
            .map(|rpm| Arc::new(TokenBucket::per_minute(rpm, cfg.workers as u32)));
        let mut client = GenClient::new(http.clone())
            .with_retry(retry)
            .with_context_budget(p.context_budget_chars)
            .with_audit(audit.clone());
        let mut embedder = Embedder::new(http, p.embedding_model.clone(), p.embedding_dimension, p.embedding_max_chars)
            .with_retry(retry)
            .with_audit(audit.clone());
        if let Some(l) = limiter {
            client = client.with_rate_limit(l.clone());
            embedder = embedder.with_rate_limit(l);
        }
        Ok(Self {
            client,
            embedder,
            audit,
            _server: server,
        })
    }
}

#[derive(Debug, Args)]
pub struct MockServerArgs {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8089")]
    pub addr: String,

    /// Mock provider script (JSON); the built-in script otherwise.
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
}

pub fn serve(cfg: &PipelineConfig, args: MockServerArgs) -> Result<()> {
    let script = load_mock_script(cfg, args.mock_script.as_ref())?;
    let server = MockServer::start(Arc::new(MockProvider::new(script)), &args.addr)
        .with_context(|| format!("binding {}", args.addr))?;
    println!("mock provider listening at {}", server.base_url());
    server.join();
    Ok(())
}
