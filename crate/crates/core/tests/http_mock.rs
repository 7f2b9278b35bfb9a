use std::sync::Arc;
use std::time::Duration;

use dialogsynth_core::dialogue::{accept_generation, MarkerConfig, Role};
use dialogsynth_core::genclient::mock::{MockProvider, MockReply, MockRoute, MockScript};
use dialogsynth_core::genclient::mock_server::MockServer;
use dialogsynth_core::genclient::{AttemptOutcome, Embedder, GenError, HttpBackend, RetryPolicy};
use dialogsynth_core::promptgen::build_standard_prompt;
use dialogsynth_core::{GenClient, GenParams};

fn serve(script: MockScript) -> (MockServer, Arc<HttpBackend>) {
    let server = MockServer::start_local(Arc::new(MockProvider::new(script))).expect("bind mock server");
    let backend = Arc::new(HttpBackend::new(server.base_url(), None, Duration::from_secs(10)));
    (server, backend)
}

#[test]
fn chat_round_trip_over_http() {
    let (server, backend) = serve(MockScript::sequence(vec![MockReply::text("你好")]));
    let client = GenClient::new(backend).with_retry(RetryPolicy::no_delay(3));
    let out = client
        .complete_text("p-1", "说点什么", &GenParams::synthesis("mock"))
        .unwrap();
    assert_eq!(out, "你好");
    assert_eq!(server.provider().chat_calls(), 1);
    assert_eq!(client.audit_log().len(), 1);
}

#[test]
fn rate_limited_twice_then_succeeds() {
    let script = MockScript::sequence(vec![
        MockReply::status(429),
        MockReply::status(429),
        MockReply::Dialogue { turns: 6 },
    ]);
    let (server, backend) = serve(script);
    let client = GenClient::new(backend).with_retry(RetryPolicy::no_delay(5));
    let prompt = build_standard_prompt("请生成一段多轮心理支持对话。").unwrap();
    let markers = MarkerConfig::default();
    let validate = |raw: &str| accept_generation(raw, &markers, 5);
    let d = client
        .generate_with_retry("p-7", &prompt, &GenParams::synthesis("mock"), &validate, 5)
        .unwrap();
    assert_eq!(d.utterances[0].role, Role::HelpSeeker);
    assert!(d.turns() >= 5);
    assert_eq!(server.provider().chat_calls(), 3);

    let log = client.attempt_log().sorted();
    let outcomes: Vec<_> = log.iter().map(|l| l.outcome).collect();
    assert_eq!(
        outcomes,
        vec![AttemptOutcome::TransportError, AttemptOutcome::TransportError, AttemptOutcome::Accepted]
    );
    assert_eq!(log.iter().map(|l| l.attempt_index).collect::<Vec<_>>(), vec![1, 2, 3]);
}

#[test]
fn client_error_is_not_retried() {
    let (server, backend) = serve(MockScript::sequence(vec![MockReply::status(401)]));
    let client = GenClient::new(backend).with_retry(RetryPolicy::no_delay(5));
    let err = client
        .complete_text("p-2", "hi", &GenParams::synthesis("mock"))
        .unwrap_err();
    assert!(err.is_provider_failure());
    assert_eq!(server.provider().chat_calls(), 1);
}

#[test]
fn malformed_replies_exhaust_attempts() {
    let (_server, backend) = serve(MockScript::sequence(vec![MockReply::Malformed]));
    let client = GenClient::new(backend).with_retry(RetryPolicy::no_delay(5));
    let prompt = build_standard_prompt("请生成一段对话。").unwrap();
    let markers = MarkerConfig::default();
    let validate = |raw: &str| accept_generation(raw, &markers, 5);
    match client.generate_with_retry("p-3", &prompt, &GenParams::synthesis("mock"), &validate, 3) {
        Err(GenError::Exhausted { attempts, .. }) => {
            assert_eq!(attempts.len(), 3);
            assert!(attempts.iter().all(|a| a.outcome == AttemptOutcome::FormatReject));
        }
        other => panic!("expected exhaustion, got {other:?}"),
    }
}

#[test]
fn routes_by_prompt_content() {
    let script = MockScript {
        routes: vec![
            MockRoute {
                when_contains: Some("标注话题".into()),
                replies: vec![MockReply::text("焦虑，失眠")],
            },
            MockRoute {
                when_contains: None,
                replies: vec![MockReply::text("其他")],
            },
        ],
        ..MockScript::default()
    };
    let (_server, backend) = serve(script);
    let client = GenClient::new(backend).with_retry(RetryPolicy::no_delay(1));
    let params = GenParams::annotation("mock");
    assert_eq!(client.complete_text("a", "请标注话题：……", &params).unwrap(), "焦虑，失眠");
    assert_eq!(client.complete_text("b", "随便聊聊", &params).unwrap(), "其他");
}

#[test]
fn embeddings_over_http_are_unit_norm_and_deterministic() {
    let (server, backend) = serve(MockScript::default().with_embedding_dimension(64));
    let embedder = Embedder::new(backend, "mock-embed", 64, 2000).with_retry(RetryPolicy::no_delay(3));
    let a = embedder.embed("今天心情不好").unwrap();
    let b = embedder.embed("今天心情不好").unwrap();
    assert_eq!(a.dimension(), 64);
    assert_eq!(a.values(), b.values());
    assert!((a.norm() - 1.0).abs() < 1e-9);
    // The second lookup is served from the embedder cache.
    assert_eq!(server.provider().embedding_calls(), 1);
}

#[test]
fn unreachable_endpoint_is_a_provider_failure() {
    // Bind then drop to get a port nobody listens on.
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = Arc::new(HttpBackend::new(format!("http://127.0.0.1:{port}/v1"), None, Duration::from_secs(2)));
    let client = GenClient::new(backend).with_retry(RetryPolicy::no_delay(2));
    let err = client
        .complete_text("p", "hi", &GenParams::synthesis("mock"))
        .unwrap_err();
    assert!(err.is_provider_failure(), "{err:?}");
}
