//! OpenAI-compatible chat-completions backend.

use std::time::{Duration, Instant};

use promptguard_core::backend::{Backend, RawResponse};
use promptguard_core::prompt::RenderedPrompt;
use serde_json::{json, Value};

use crate::config::BackendConfig;
use crate::retry::{BackendError, Failure, InFlight};

/// Status and body of one HTTP exchange.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Sends one JSON POST. An `Err` is a transport-level failure.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value, timeout: Duration) -> Result<HttpReply, String>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| BackendError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value, timeout: Duration) -> Result<HttpReply, String> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        if let Some(key) = bearer {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

pub struct RemoteBackend<T = HttpTransport> {
    config: BackendConfig,
    transport: T,
    in_flight: InFlight,
}

impl RemoteBackend<HttpTransport> {
    pub fn http(config: BackendConfig) -> Result<Self, BackendError> {
        Ok(Self::new(config, HttpTransport::new()?))
    }
}

impl<T: Transport> RemoteBackend<T> {
    pub fn new(config: BackendConfig, transport: T) -> Self {
        let in_flight = InFlight::new(config.max_in_flight);
        RemoteBackend {
            config,
            transport,
            in_flight,
        }
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }

    pub fn request_body(&self, prompt: &RenderedPrompt) -> Value {
        json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": self.config.temperature,
        })
    }

    fn attempt(&self, url: &str, body: &Value) -> Result<String, Failure> {
        let reply = {
            let _permit = self.in_flight.acquire();
            self.transport
                .post_json(url, self.config.api_key.as_deref(), body, self.config.timeout())
                .map_err(Failure::Transport)?
        };
        if !(200..300).contains(&reply.status) {
            return Err(Failure::Status {
                status: reply.status,
                body: reply.body,
            });
        }
        completion_text(&reply.body).map_err(Failure::Fatal)
    }
}

/// `choices[0].message.content` of a chat-completions response; a null
/// content counts as empty text.
pub fn completion_text(body: &str) -> Result<String, BackendError> {
    let decode = |m: &str| BackendError::Decode(format!("{m}: {}", crate::retry::excerpt(body)));
    let v: Value = serde_json::from_str(body).map_err(|_| decode("not JSON"))?;
    match v.pointer("/choices/0/message/content") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Null) => Ok(String::new()),
        _ => Err(decode("missing choices[0].message.content")),
    }
}

impl<T: Transport> Backend for RemoteBackend<T> {
    type Error = BackendError;

    fn classify(&self, prompt: &RenderedPrompt) -> Result<RawResponse, BackendError> {
        let url = self.url();
        let body = self.request_body(prompt);
        let start = Instant::now();
        let (text, attempts) = self.config.retry_policy().run(|_| self.attempt(&url, &body))?;
        Ok(RawResponse {
            text,
            latency_ms: start.elapsed().as_millis() as u64,
            attempts,
        })
    }

    fn classify_many(&self, prompts: &[RenderedPrompt]) -> Vec<Result<RawResponse, BackendError>> {
        std::thread::scope(|s| {
            let handles: Vec<_> = prompts.iter().map(|p| s.spawn(|| self.classify(p))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("classify panicked"))
                .collect()
        })
    }
}
