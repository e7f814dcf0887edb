//! Chat-completions agents.
//!
//! An [`LlmAgent`] keeps the whole dialogue: the system prompt, then one user message
//! per observation and one assistant message per decision. Each turn resends the full
//! history to the endpoint.
//!
//! ```
//! use arena_core::Action;
//! use arena_gateway::parse_action_reply;
//!
//! let (action, rationale) = parse_action_reply(r#"Sure! {"action": "LEFT"}"#).unwrap();
//! assert_eq!(action, Action::Left);
//! assert_eq!(rationale, None);
//! ```

mod agent;
mod backend;
mod config;
mod dialogue;
mod limits;
mod reply;

pub use agent::{interpret_body, request_action, LlmAgent};
pub use backend::{
    completion_body, BackendError, ChatBackend, ChatRequest, HttpBackend, MockBackend,
};
pub use config::{AgentConfig, ConfigError, RationaleMode, ReasoningSource, RetryPolicy};
pub use dialogue::{
    assistant_message, build_context, ChatMessage, DialogueTurn, GatewayError, Role,
};
pub use limits::{Limits, Permit, RateLimiter, Semaphore};
pub use reply::{decode_completion, parse_action_reply, Completion, ReplyError};
