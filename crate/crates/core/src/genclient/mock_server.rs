//! Local HTTP server speaking the chat-completions/embeddings wire format,
//! backed by a [`MockProvider`].

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::json;
use tiny_http::{Header, Method, Response, Server};

use super::mock::MockProvider;
use super::provider::{ChatRequest, EmbeddingRequest, TransportError};

pub struct MockServer {
    server: Arc<Server>,
    addr: SocketAddr,
    provider: Arc<MockProvider>,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and serves in a
    /// background thread until dropped.
    pub fn start(provider: Arc<MockProvider>, addr: &str) -> std::io::Result<Self> {
        let server = Arc::new(Server::http(addr).map_err(std::io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("mock server is not bound to an IP address"))?;
        let worker = {
            let server = Arc::clone(&server);
            let provider = Arc::clone(&provider);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    handle(&provider, request);
                }
            })
        };
        Ok(Self {
            server,
            addr,
            provider,
            worker: Some(worker),
        })
    }

    pub fn start_local(provider: Arc<MockProvider>) -> std::io::Result<Self> {
        Self::start(provider, "127.0.0.1:0")
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL including the `/v1` prefix.
    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn provider(&self) -> &Arc<MockProvider> {
        &self.provider
    }

    /// Serves on the calling thread until the process exits.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header is valid")
}

fn reply(request: tiny_http::Request, status: u16, body: serde_json::Value) {
    let response = Response::from_string(body.to_string())
        .with_status_code(status)
        .with_header(json_header());
    let _ = request.respond(response);
}

fn handle(provider: &MockProvider, mut request: tiny_http::Request) {
    let mut body = String::new();
    if request.as_reader().read_to_string(&mut body).is_err() {
        return reply(request, 400, json!({"error": {"message": "unreadable body"}}));
    }
    let url = request.url().to_string();
    if *request.method() != Method::Post {
        return reply(request, 405, json!({"error": {"message": "POST only"}}));
    }
    if url.ends_with("/chat/completions") {
        let parsed: ChatRequest = match serde_json::from_str(&body) {
            Ok(r) => r,
            Err(e) => return reply(request, 400, json!({"error": {"message": e.to_string()}})),
        };
        match provider.respond(&parsed) {
            Ok(text) => reply(
                request,
                200,
                json!({
                    "id": "mock-chat",
                    "object": "chat.completion",
                    "model": parsed.model,
                    "choices": [{
                        "index": 0,
                        "message": {"role": "assistant", "content": text},
                        "finish_reason": "stop"
                    }]
                }),
            ),
            Err(TransportError::Status { status, body }) => {
                reply(request, status, json!({"error": {"message": body}}))
            }
            Err(e) => reply(request, 500, json!({"error": {"message": e.to_string()}})),
        }
    } else if url.ends_with("/embeddings") {
        let parsed: EmbeddingRequest = match serde_json::from_str(&body) {
            Ok(r) => r,
            Err(e) => return reply(request, 400, json!({"error": {"message": e.to_string()}})),
        };
        let vector = provider.embed_text(&parsed.input);
        reply(
            request,
            200,
            json!({
                "object": "list",
                "model": parsed.model,
                "data": [{"object": "embedding", "index": 0, "embedding": vector}]
            }),
        )
    } else {
        reply(request, 404, json!({"error": {"message": format!("unknown endpoint {url}")}}))
    }
}
