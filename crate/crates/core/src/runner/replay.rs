use serde::Serialize;
use thiserror::Error;

use crate::engine::{init_episode, EngineError, Game, StateDigest, WorldState};

use super::{episode_seed, SessionTrace, StepStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ReplayError {
    #[error("step {index} out of range (trace has {len} steps)")]
    StepOutOfRange { index: usize, len: usize },
    #[error("digest mismatch at step record {index}: stored {stored}, replayed {replayed}")]
    DigestMismatch {
        index: usize,
        stored: StateDigest,
        replayed: StateDigest,
    },
    #[error("score or status mismatch at step record {index}")]
    OutcomeMismatch { index: usize },
    #[error("bundle in trace header is invalid: {0}")]
    Bundle(String),
    #[error("engine: {0}")]
    Engine(String),
}

impl From<EngineError> for ReplayError {
    fn from(e: EngineError) -> Self {
        ReplayError::Engine(e.to_string())
    }
}

fn game_of(trace: &SessionTrace) -> Result<std::sync::Arc<Game>, ReplayError> {
    let bundle = trace
        .header
        .bundle
        .compile()
        .map_err(|e| ReplayError::Bundle(e.to_string()))?;
    Ok(Game::new(bundle)?)
}

/// The world as the agent saw it before step record `index`; `index == steps.len()`
/// gives the state after the final step. Re-simulates the episode from its seed and
/// checks every stored digest on the way.
pub fn frame_at(trace: &SessionTrace, index: usize) -> Result<WorldState, ReplayError> {
    let len = trace.steps.len();
    if index > len || (len == 0 && index > 0) {
        return Err(ReplayError::StepOutOfRange { index, len });
    }
    let game = game_of(trace)?;
    let seed = trace.header.run.seed;
    if len == 0 {
        return Ok(init_episode(
            &game,
            trace.header.run.start_level,
            episode_seed(seed, 0),
        )?);
    }
    // Episode containing the record (or the last record when index == len).
    let anchor = index.min(len - 1);
    let ord = trace.steps[anchor].ordinal;
    let start = trace.steps[..anchor]
        .iter()
        .rposition(|s| s.ordinal != ord)
        .map_or(0, |i| i + 1);
    let first = &trace.steps[start];
    let mut state = init_episode(&game, first.level, episode_seed(seed, ord))?;
    for (i, rec) in trace.steps.iter().enumerate().take(index).skip(start) {
        check(i, rec.pre_digest, &state)?;
        state.step(rec.action)?;
        check(i, rec.digest, &state)?;
    }
    if index < len {
        check(index, trace.steps[index].pre_digest, &state)?;
    }
    Ok(state)
}

fn check(index: usize, stored: StateDigest, state: &WorldState) -> Result<(), ReplayError> {
    let replayed = state.state_hash();
    if replayed != stored {
        return Err(ReplayError::DigestMismatch {
            index,
            stored,
            replayed,
        });
    }
    Ok(())
}

/// Re-simulates the whole trace and checks digests, scores and episode outcomes.
pub fn verify_trace(trace: &SessionTrace) -> Result<(), ReplayError> {
    let game = game_of(trace)?;
    let seed = trace.header.run.seed;
    let mut state: Option<WorldState> = None;
    let mut ordinal = None;
    for (i, rec) in trace.steps.iter().enumerate() {
        if ordinal != Some(rec.ordinal) {
            state = Some(init_episode(
                &game,
                rec.level,
                episode_seed(seed, rec.ordinal),
            )?);
            ordinal = Some(rec.ordinal);
        }
        let s = state.as_mut().expect("initialized above");
        check(i, rec.pre_digest, s)?;
        s.step(rec.action)?;
        check(i, rec.digest, s)?;
        let status_ok = match rec.status {
            StepStatus::Won => s.status() == crate::engine::EpisodeStatus::Won,
            StepStatus::Lost => s.status() == crate::engine::EpisodeStatus::Lost,
            StepStatus::Ongoing | StepStatus::Truncated => {
                s.status() == crate::engine::EpisodeStatus::Ongoing
            }
        };
        if s.score() != rec.score || !status_ok {
            return Err(ReplayError::OutcomeMismatch { index: i });
        }
    }
    Ok(())
}
