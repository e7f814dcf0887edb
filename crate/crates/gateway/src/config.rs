use std::time::Duration;

use arena_core::obs::SuggestionLevel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RationaleMode {
    /// The model's reasoning is replayed to it as the rationale of its earlier turns.
    CopiedReasoning,
    /// Earlier turns show the chosen action only.
    ActionOnly,
}

/// Where an endpoint puts its reasoning trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReasoningSource {
    /// A sibling of `content` in the response message, e.g. `reasoning_content`.
    Field {
        name: String,
    },
    /// A block inside the content, e.g. `<think>...</think>`.
    Delimited {
        open: String,
        close: String,
    },
    None,
}

impl Default for ReasoningSource {
    fn default() -> Self {
        ReasoningSource::Field {
            name: "reasoning_content".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Pause before retry `i` is `backoff_ms[min(i, len - 1)]`.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_ms: vec![1_000, 4_000, 16_000],
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: usize) -> Duration {
        let ms = self
            .backoff_ms
            .get(retry)
            .or(self.backoff_ms.last())
            .copied()
            .unwrap_or(0);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Agent id in traces; the model name when absent.
    pub label: Option<String>,
    /// Base URL; requests go to `<endpoint>/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key. Never serialized with its value.
    pub api_key_env: String,
    pub rationale_mode: RationaleMode,
    pub suggestion_level: SuggestionLevel,
    pub temperature: Option<f32>,
    pub max_tokens: Option<u32>,
    pub retry: RetryPolicy,
    pub timeout_ms: u64,
    pub reasoning: ReasoningSource,
    /// Per-endpoint request rate; unlimited when absent.
    pub requests_per_minute: Option<u32>,
    /// Earlier exchanges kept in each request, oldest dropped first; unlimited when absent.
    pub max_context_turns: Option<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            label: None,
            endpoint: "http://localhost:8000/v1".into(),
            model: "model".into(),
            api_key_env: "ARENA_API_KEY".into(),
            rationale_mode: RationaleMode::CopiedReasoning,
            suggestion_level: SuggestionLevel::Minimal,
            temperature: None,
            max_tokens: None,
            retry: RetryPolicy::default(),
            timeout_ms: 300_000,
            reasoning: ReasoningSource::default(),
            requests_per_minute: None,
            max_context_turns: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("retry.max_attempts must be at least 1")]
    NoAttempts,
    #[error("timeout_ms must be positive")]
    ZeroTimeout,
    #[error("endpoint is empty")]
    NoEndpoint,
    #[error("copied_reasoning needs a reasoning source")]
    NoReasoningSource,
    #[error("requests_per_minute must be positive")]
    ZeroRate,
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.retry.max_attempts == 0 {
            return Err(ConfigError::NoAttempts);
        }
        if self.timeout_ms == 0 {
            return Err(ConfigError::ZeroTimeout);
        }
        if self.endpoint.trim().is_empty() {
            return Err(ConfigError::NoEndpoint);
        }
        if self.rationale_mode == RationaleMode::CopiedReasoning
            && self.reasoning == ReasoningSource::None
        {
            return Err(ConfigError::NoReasoningSource);
        }
        if self.requests_per_minute == Some(0) {
            return Err(ConfigError::ZeroRate);
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn id(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.model.clone())
    }
}
