use arena_core::Action;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RationaleMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// Wire message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// One recorded turn. A user turn holds one observation. An assistant turn holds the
/// reply text as received, the parsed action and the rationale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub role: Role,
    pub content: String,
    pub parsed_action: Option<Action>,
    pub rationale: Option<String>,
}

impl DialogueTurn {
    pub fn user(observation: impl Into<String>) -> Self {
        DialogueTurn {
            role: Role::User,
            content: observation.into(),
            parsed_action: None,
            rationale: None,
        }
    }

    pub fn assistant(
        content: impl Into<String>,
        action: Action,
        rationale: Option<String>,
    ) -> Self {
        DialogueTurn {
            role: Role::Assistant,
            content: content.into(),
            parsed_action: Some(action),
            rationale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("malformed history at turn {index}: {reason}")]
    MalformedHistory { index: usize, reason: &'static str },
}

/// The assistant message as the model sees it on later turns. The reply is re-rendered
/// from its parsed fields, so stray prose in the original text never re-enters context.
pub fn assistant_message(action: Action, rationale: Option<&str>, mode: RationaleMode) -> String {
    match (mode, rationale) {
        (RationaleMode::CopiedReasoning, Some(r)) => format!(
            "{{\"rationale\": {}, \"action\": \"{}\"}}",
            serde_json::Value::String(r.to_string()),
            action.token()
        ),
        _ => format!("{{\"action\": \"{}\"}}", action.token()),
    }
}

/// `[system, history..., user(new_observation)]`. The history must alternate user and
/// assistant turns, starting with a user turn and ending with an assistant turn.
pub fn build_context(
    history: &[DialogueTurn],
    system_prompt: &str,
    new_observation: &str,
    mode: RationaleMode,
) -> Result<Vec<ChatMessage>, GatewayError> {
    if !history.len().is_multiple_of(2) {
        return Err(GatewayError::MalformedHistory {
            index: history.len() - 1,
            reason: "history ends on a user turn",
        });
    }
    let mut out = Vec::with_capacity(history.len() + 2);
    out.push(ChatMessage {
        role: Role::System,
        content: system_prompt.to_string(),
    });
    for (index, turn) in history.iter().enumerate() {
        let expected = if index % 2 == 0 {
            Role::User
        } else {
            Role::Assistant
        };
        if turn.role != expected {
            return Err(GatewayError::MalformedHistory {
                index,
                reason: "turns must alternate user, assistant",
            });
        }
        let content = match turn.role {
            Role::Assistant => {
                let action = turn.parsed_action.ok_or(GatewayError::MalformedHistory {
                    index,
                    reason: "assistant turn without an action",
                })?;
                assistant_message(action, turn.rationale.as_deref(), mode)
            }
            _ => turn.content.clone(),
        };
        out.push(ChatMessage {
            role: turn.role,
            content,
        });
    }
    out.push(ChatMessage {
        role: Role::User,
        content: new_observation.to_string(),
    });
    Ok(out)
}
