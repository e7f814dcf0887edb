use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::config::AgentConfig;
use crate::dialogue::ChatMessage;

/// Request body for `POST /chat/completions`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("timed out")]
    Timeout,
    /// A client error that retrying will not fix, such as a bad key.
    #[error("HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
}

/// Sends one request and returns the raw response body.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

/// Blocking HTTP client for chat-completions endpoints.
pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl HttpBackend {
    /// Reads the API key from `cfg.api_key_env`; no key means no `Authorization` header.
    pub fn new(cfg: &AgentConfig) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout()))
            .http_status_as_error(false)
            .build();
        HttpBackend {
            agent: ureq::Agent::new_with_config(config),
            url: format!("{}/chat/completions", cfg.endpoint.trim_end_matches('/')),
            api_key: std::env::var(&cfg.api_key_env)
                .ok()
                .filter(|k| !k.is_empty()),
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let body =
            serde_json::to_string(request).map_err(|e| BackendError::Transport(e.to_string()))?;
        let mut req = self.agent.post(&self.url).content_type("application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout,
            other => BackendError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout,
            other => BackendError::Transport(other.to_string()),
        })?;
        match status {
            200..=299 => Ok(text),
            429 => Err(BackendError::RateLimited { retry_after }),
            408 | 500..=599 => Err(BackendError::Transport(format!("HTTP {status}: {text}"))),
            _ => Err(BackendError::Rejected { status, body: text }),
        }
    }
}

/// A chat-completions response body with one choice.
pub fn completion_body(content: &str, reasoning: Option<(&str, &str)>) -> String {
    let mut message = serde_json::json!({ "role": "assistant", "content": content });
    if let Some((field, text)) = reasoning {
        message[field] = serde_json::Value::String(text.to_string());
    }
    serde_json::json!({ "choices": [{ "index": 0, "message": message }] }).to_string()
}

type Responder = Box<dyn Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync>;

/// In-process backend. Records every request it receives.
pub struct MockBackend {
    responder: Responder,
    requests: Mutex<Vec<ChatRequest>>,
}

impl MockBackend {
    pub fn new(
        f: impl Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync + 'static,
    ) -> Self {
        MockBackend {
            responder: Box::new(f),
            requests: Mutex::new(Vec::new()),
        }
    }

    /// Answers from `script` in order, repeating the last entry once it runs out.
    pub fn scripted(script: Vec<Result<String, BackendError>>) -> Self {
        let queue: Mutex<VecDeque<_>> = Mutex::new(script.into());
        MockBackend::new(move |_| {
            let mut queue = queue.lock().unwrap_or_else(|e| e.into_inner());
            if queue.len() > 1 {
                queue.pop_front().expect("non-empty")
            } else {
                queue
                    .front()
                    .cloned()
                    .unwrap_or(Err(BackendError::Transport("empty script".into())))
            }
        })
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        self.requests
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(request.clone());
        (self.responder)(request)
    }
}
