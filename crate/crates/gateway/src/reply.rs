use std::str::FromStr;

use arena_core::Action;
use serde_json::Value;
use thiserror::Error;

use crate::config::ReasoningSource;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplyError {
    #[error("no JSON object with an `action` field")]
    NoActionField,
    #[error("unknown action `{0}`")]
    UnknownActionToken(String),
    #[error("response body is not a chat completion: {0}")]
    BadBody(String),
}

/// Finds the first well-formed JSON object in `text` and reads its `action` (required,
/// case-insensitive) and `rationale` (optional) fields.
pub fn parse_action_reply(text: &str) -> Result<(Action, Option<String>), ReplyError> {
    let obj = text
        .match_indices('{')
        .find_map(|(i, _)| {
            serde_json::Deserializer::from_str(&text[i..])
                .into_iter::<Value>()
                .next()
                .and_then(Result::ok)
                .filter(Value::is_object)
        })
        .ok_or(ReplyError::NoActionField)?;
    let token = match obj.get("action") {
        Some(Value::String(s)) => s,
        Some(other) => return Err(ReplyError::UnknownActionToken(other.to_string())),
        None => return Err(ReplyError::NoActionField),
    };
    let action =
        Action::from_str(token).map_err(|_| ReplyError::UnknownActionToken(token.clone()))?;
    let rationale = obj
        .get("rationale")
        .and_then(Value::as_str)
        .map(str::to_string);
    Ok((action, rationale))
}

/// The assistant text of a response, with any reasoning trace split off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub content: String,
    pub reasoning: Option<String>,
}

/// Reads `choices[0].message` of a chat-completions response body.
pub fn decode_completion(body: &str, source: &ReasoningSource) -> Result<Completion, ReplyError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ReplyError::BadBody(e.to_string()))?;
    let msg = v
        .pointer("/choices/0/message")
        .ok_or_else(|| ReplyError::BadBody("missing choices[0].message".into()))?;
    let content = msg
        .get("content")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    Ok(match source {
        ReasoningSource::Field { name } => Completion {
            content,
            reasoning: msg
                .get(name)
                .and_then(Value::as_str)
                .filter(|r| !r.is_empty())
                .map(str::to_string),
        },
        ReasoningSource::Delimited { open, close } => match content.find(open.as_str()) {
            Some(start) => {
                let inner = start + open.len();
                let end = content[inner..]
                    .find(close.as_str())
                    .map_or(content.len(), |e| inner + e);
                let reasoning = content[inner..end].trim().to_string();
                let rest = format!(
                    "{}{}",
                    &content[..start],
                    &content[(end + close.len()).min(content.len())..]
                );
                Completion {
                    content: rest,
                    reasoning: Some(reasoning).filter(|r| !r.is_empty()),
                }
            }
            None => Completion {
                content,
                reasoning: None,
            },
        },
        ReasoningSource::None => Completion {
            content,
            reasoning: None,
        },
    })
}
