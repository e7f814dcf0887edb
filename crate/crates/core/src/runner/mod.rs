//! Curriculum sessions and their traces.
//!
//! A session plays one game from level 0. Episodes restart on the same level after every
//! win or loss; the protocol decides when the level changes:
//!
//! * [`Protocol::Blocked`]: advance after `consecutive_wins_to_advance` wins in a row;
//! * [`Protocol::FixedWindow`]: advance every `window_steps` steps whatever happened;
//! * [`Protocol::FreePlay`]: never advance (interactive play).
//!
//! The session stops when every level is done or the global step budget runs out; the
//! episode in flight at that point is recorded as truncated.

mod censor;
mod driver;
mod replay;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::AgentError;
use crate::engine::EngineError;
use crate::obs::ObsError;
use crate::vgdl::BundleError;

pub use censor::censor_trace;
pub use driver::{episode_seed, run_session, SessionDriver};
pub use replay::{frame_at, verify_trace, ReplayError};
pub use trace::{
    load_trace, trace_file_name, Censoring, EndReason, EpisodeSummary, LevelRecord, SessionTrace,
    StepRecord, StepStatus, TraceEnd, TraceError, TraceHeader, TraceLine, TraceWriter,
    SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    #[default]
    Blocked,
    FixedWindow,
    FreePlay,
}

impl std::str::FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "blocked" => Ok(Protocol::Blocked),
            "fixed_window" | "fixed-window" => Ok(Protocol::FixedWindow),
            "free_play" | "free-play" => Ok(Protocol::FreePlay),
            _ => Err(format!("unknown protocol `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub consecutive_wins_to_advance: u32,
    pub global_step_budget: u32,
    /// Steps after which a single episode is cut off as truncated.
    pub episode_step_cap: Option<u32>,
    /// Window length for [`Protocol::FixedWindow`].
    pub window_steps: u32,
    pub seed: u64,
    /// Seed for the color assignment; defaults to `seed`.
    pub color_seed: Option<u64>,
    /// Level the session opens on.
    pub start_level: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            protocol: Protocol::Blocked,
            consecutive_wins_to_advance: 2,
            global_step_budget: 1600,
            episode_step_cap: None,
            window_steps: 60,
            seed: 0,
            color_seed: None,
            start_level: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::InvalidConfig(m.to_string()));
        if self.global_step_budget == 0 {
            return bad("global_step_budget must be positive");
        }
        if self.consecutive_wins_to_advance == 0 {
            return bad("consecutive_wins_to_advance must be positive");
        }
        if self.episode_step_cap == Some(0) {
            return bad("episode_step_cap must be positive");
        }
        if self.protocol == Protocol::FixedWindow && self.window_steps == 0 {
            return bad("window_steps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Obs(#[from] ObsError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("agent aborted the session: {error}")]
    AgentAborted {
        error: AgentError,
        trace: Box<SessionTrace>,
    },
    #[error("session already finished")]
    Finished,
    #[error("trace does not belong to this session: {0}")]
    ResumeMismatch(String),
}
