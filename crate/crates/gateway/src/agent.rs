use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use arena_core::agent::{Agent, AgentDescriptor, AgentError, AgentReply, SessionContext};
use arena_core::obs::render_system_prompt;
use arena_core::Action;

use crate::backend::{BackendError, ChatBackend, ChatRequest};
use crate::config::{AgentConfig, RationaleMode};
use crate::dialogue::{build_context, ChatMessage, DialogueTurn};
use crate::limits::Limits;
use crate::reply::{decode_completion, parse_action_reply, ReplyError};

/// Re-derives the action and rationale from a recorded response body.
pub fn interpret_body(
    cfg: &AgentConfig,
    body: &str,
) -> Result<(Action, Option<String>), ReplyError> {
    let c = decode_completion(body, &cfg.reasoning)?;
    let (action, stated) = parse_action_reply(&c.content)?;
    let rationale = match cfg.rationale_mode {
        RationaleMode::CopiedReasoning => c.reasoning.or(stated),
        RationaleMode::ActionOnly => None,
    };
    Ok((action, rationale))
}

enum Failure {
    Transport(String),
    RateLimited,
    Unparseable(String),
}

/// Sends `messages` and parses the reply, retrying transport errors, rate limits and
/// unparseable replies up to `cfg.retry.max_attempts` times. Timeouts and rejected
/// requests fail at once.
pub fn request_action(
    cfg: &AgentConfig,
    backend: &dyn ChatBackend,
    limits: &Limits,
    messages: Vec<ChatMessage>,
) -> Result<AgentReply, AgentError> {
    let request = ChatRequest {
        model: cfg.model.clone(),
        messages,
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
    };
    let limiter = limits.rate_limiter(&cfg.endpoint, cfg.requests_per_minute);
    let start = Instant::now();
    let mut failure = Failure::Transport("no attempt made".into());
    let mut pause = Duration::ZERO;
    for attempt in 0..cfg.retry.max_attempts {
        if attempt > 0 {
            thread::sleep(pause.max(cfg.retry.delay(attempt as usize - 1)));
        }
        pause = Duration::ZERO;
        let result = {
            let _permit = limits.in_flight.acquire();
            if let Some(l) = &limiter {
                l.wait();
            }
            backend.complete(&request)
        };
        match result {
            Ok(body) => match interpret_body(cfg, &body) {
                Ok((action, rationale)) => {
                    return Ok(AgentReply::new(
                        action,
                        rationale,
                        Some(body),
                        start.elapsed(),
                    ))
                }
                Err(e) => failure = Failure::Unparseable(e.to_string()),
            },
            Err(BackendError::Timeout) => return Err(AgentError::Timeout),
            Err(BackendError::Rejected { status, body }) => {
                return Err(AgentError::Transport {
                    message: format!("HTTP {status}: {body}"),
                })
            }
            Err(BackendError::RateLimited { retry_after }) => {
                pause = retry_after.unwrap_or_default();
                failure = Failure::RateLimited;
            }
            Err(BackendError::Transport(m)) => failure = Failure::Transport(m),
        }
    }
    let attempts = cfg.retry.max_attempts;
    Err(match failure {
        Failure::Transport(message) => AgentError::Transport { message },
        Failure::RateLimited => AgentError::RateLimited { attempts },
        Failure::Unparseable(reason) => AgentError::UnparseableReply { attempts, reason },
    })
}

/// A model behind a chat-completions endpoint, holding the session's dialogue.
pub struct LlmAgent {
    cfg: AgentConfig,
    backend: Arc<dyn ChatBackend>,
    limits: Arc<Limits>,
    system_prompt: Option<String>,
    history: Vec<DialogueTurn>,
}

impl LlmAgent {
    pub fn new(cfg: AgentConfig, backend: Arc<dyn ChatBackend>, limits: Arc<Limits>) -> Self {
        LlmAgent {
            cfg,
            backend,
            limits,
            system_prompt: None,
            history: Vec::new(),
        }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn history(&self) -> &[DialogueTurn] {
        &self.history
    }

    pub fn system_prompt(&self) -> Option<&str> {
        self.system_prompt.as_deref()
    }

    fn record(&mut self, observation: &str, reply: &AgentReply) {
        let content = reply
            .raw
            .as_deref()
            .and_then(|b| decode_completion(b, &self.cfg.reasoning).ok())
            .map(|c| c.content)
            .unwrap_or_default();
        self.history.push(DialogueTurn::user(observation));
        self.history.push(DialogueTurn::assistant(
            content,
            reply.action,
            reply.rationale.clone(),
        ));
    }
}

impl Agent for LlmAgent {
    fn descriptor(&self) -> AgentDescriptor {
        AgentDescriptor {
            id: self.cfg.id(),
            config: serde_json::to_value(&self.cfg).expect("config serializes"),
        }
    }

    fn begin_session(&mut self, ctx: &SessionContext<'_>) -> Result<(), AgentError> {
        self.system_prompt = Some(render_system_prompt(
            self.cfg.suggestion_level,
            ctx.description,
            ctx.color_map,
        ));
        self.history.clear();
        Ok(())
    }

    fn act(&mut self, observation: &str) -> Result<AgentReply, AgentError> {
        let system = self
            .system_prompt
            .as_deref()
            .ok_or_else(|| AgentError::Transport {
                message: "act called before begin_session".into(),
            })?;
        let keep = self
            .cfg
            .max_context_turns
            .map_or(self.history.len(), |n| (2 * n).min(self.history.len()));
        let recent = &self.history[self.history.len() - keep..];
        let messages = build_context(recent, system, observation, self.cfg.rationale_mode)
            .map_err(|e| AgentError::Transport {
                message: e.to_string(),
            })?;
        let reply = request_action(&self.cfg, self.backend.as_ref(), &self.limits, messages)?;
        self.record(observation, &reply);
        Ok(reply)
    }

    fn restore(&mut self, observation: &str, reply: &AgentReply) {
        self.record(observation, reply);
    }
}
