//! The agent interface shared by scripted policies, remote models and humans.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Action;
use crate::obs::ColorMap;
use crate::vgdl::GameDescription;

/// Identifies an agent and echoes its configuration into trace headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDescriptor {
    pub id: String,
    pub config: serde_json::Value,
}

/// What an agent learns when a session starts.
#[derive(Debug, Clone, Copy)]
pub struct SessionContext<'a> {
    pub game: &'a str,
    pub description: &'a GameDescription,
    pub color_map: &'a ColorMap,
}

/// One decision. `reasoning_chars` is the rationale's length in characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentReply {
    pub action: Action,
    pub rationale: Option<String>,
    /// Verbatim endpoint response, when there was one.
    pub raw: Option<String>,
    pub latency: Duration,
    pub reasoning_chars: usize,
}

impl AgentReply {
    pub fn new(
        action: Action,
        rationale: Option<String>,
        raw: Option<String>,
        latency: Duration,
    ) -> Self {
        let reasoning_chars = rationale.as_deref().map_or(0, |r| r.chars().count());
        AgentReply {
            action,
            rationale,
            raw,
            latency,
            reasoning_chars,
        }
    }

    /// A reply with no rationale, raw text or latency.
    pub fn bare(action: Action) -> Self {
        AgentReply::new(action, None, None, Duration::ZERO)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum AgentError {
    #[error("transport error: {message}")]
    Transport { message: String },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("unparseable reply after {attempts} attempts: {reason}")]
    UnparseableReply { attempts: u32, reason: String },
    #[error("request timed out")]
    Timeout,
}

/// A player. One session drives one agent; `act` is called once per step with the
/// rendered observation and must not be called concurrently.
pub trait Agent: Send {
    fn descriptor(&self) -> AgentDescriptor;

    fn begin_session(&mut self, _ctx: &SessionContext<'_>) -> Result<(), AgentError> {
        Ok(())
    }

    fn act(&mut self, observation: &str) -> Result<AgentReply, AgentError>;

    /// Re-injects an exchange recorded earlier, when a session is resumed from its trace.
    fn restore(&mut self, _observation: &str, _reply: &AgentReply) {}
}

/// Reads the `STEP <n>` header of an observation.
pub fn observation_step(observation: &str) -> Option<u32> {
    observation
        .strip_prefix("STEP ")?
        .split(|c: char| !c.is_ascii_digit())
        .next()?
        .parse()
        .ok()
}

type PolicyFn = Box<dyn FnMut(&str) -> Action + Send>;

enum Policy {
    Constant(Action),
    Random {
        seed: u64,
        rng: Box<ChaCha8Rng>,
    },
    /// Action by episode step; `fallback` past the end of the table.
    Table {
        actions: Vec<Action>,
        fallback: Action,
    },
    Func(PolicyFn),
}

/// Deterministic test agent: replies instantly, never gives a rationale.
pub struct ScriptedAgent {
    id: String,
    policy: Policy,
}

impl ScriptedAgent {
    pub fn constant(action: Action) -> Self {
        ScriptedAgent {
            id: format!("scripted-{}", action.token()),
            policy: Policy::Constant(action),
        }
    }

    /// Uniform over the six actions; the same seed gives the same sequence.
    pub fn random(seed: u64) -> Self {
        ScriptedAgent {
            id: format!("scripted-random-{seed}"),
            policy: Policy::Random {
                seed,
                rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
            },
        }
    }

    /// Plays `actions[n]` on the observation for episode step `n`, so the sequence
    /// restarts with every episode.
    pub fn table(actions: Vec<Action>, fallback: Action) -> Self {
        ScriptedAgent {
            id: "scripted-table".into(),
            policy: Policy::Table { actions, fallback },
        }
    }

    pub fn from_fn(id: impl Into<String>, f: impl FnMut(&str) -> Action + Send + 'static) -> Self {
        ScriptedAgent {
            id: id.into(),
            policy: Policy::Func(Box::new(f)),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn decide(&mut self, observation: &str) -> Action {
        match &mut self.policy {
            Policy::Constant(a) => *a,
            Policy::Random { rng, .. } => Action::ALL[rng.random_range(0..Action::ALL.len())],
            Policy::Table { actions, fallback } => observation_step(observation)
                .and_then(|n| actions.get(n as usize).copied())
                .unwrap_or(*fallback),
            Policy::Func(f) => f(observation),
        }
    }
}

impl Agent for ScriptedAgent {
    fn descriptor(&self) -> AgentDescriptor {
        let mut cfg = BTreeMap::new();
        let kind = match &self.policy {
            Policy::Constant(a) => {
                cfg.insert("action", serde_json::json!(a.token()));
                "constant"
            }
            Policy::Random { seed, .. } => {
                cfg.insert("seed", serde_json::json!(seed));
                "random"
            }
            Policy::Table { actions, fallback } => {
                let t: Vec<&str> = actions.iter().map(|a| a.token()).collect();
                cfg.insert("actions", serde_json::json!(t));
                cfg.insert("fallback", serde_json::json!(fallback.token()));
                "table"
            }
            Policy::Func(_) => "function",
        };
        cfg.insert("policy", serde_json::json!(kind));
        AgentDescriptor {
            id: self.id.clone(),
            config: serde_json::to_value(cfg).expect("plain map"),
        }
    }

    fn act(&mut self, observation: &str) -> Result<AgentReply, AgentError> {
        Ok(AgentReply::bare(self.decide(observation)))
    }

    fn restore(&mut self, observation: &str, _reply: &AgentReply) {
        // Keep stateful policies on the same sequence they had before the interruption.
        if let Policy::Random { .. } = self.policy {
            self.decide(observation);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_header() {
        assert_eq!(observation_step("STEP 12 | SCORE 3\n"), Some(12));
        assert_eq!(observation_step("nope"), None);
    }

    #[test]
    fn random_policy_repeats() {
        let seq = |s| {
            let mut a = ScriptedAgent::random(s);
            (0..20).map(|_| a.decide("")).collect::<Vec<_>>()
        };
        assert_eq!(seq(4), seq(4));
        assert_ne!(seq(4), seq(5));
    }

    #[test]
    fn table_follows_episode_step() {
        let mut a = ScriptedAgent::table(vec![Action::Up, Action::Left], Action::Wait);
        assert_eq!(a.decide("STEP 1 | SCORE 0"), Action::Left);
        assert_eq!(a.decide("STEP 0 | SCORE 0"), Action::Up);
        assert_eq!(a.decide("STEP 7 | SCORE 0"), Action::Wait);
        assert_eq!(
            ScriptedAgent::constant(Action::Wait).decide("anything"),
            Action::Wait
        );
    }

    #[test]
    fn reasoning_chars_counts_characters() {
        let r = AgentReply::new(
            Action::Right,
            Some("go right to the key".into()),
            None,
            Duration::ZERO,
        );
        assert_eq!(r.reasoning_chars, 19);
        assert_eq!(AgentReply::bare(Action::Up).reasoning_chars, 0);
    }
}
