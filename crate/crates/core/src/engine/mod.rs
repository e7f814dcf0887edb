//! Deterministic step semantics.
//!
//! Each tick runs a fixed phase order:
//!
//! 1. the avatar moves or uses its ability;
//! 2. missiles and NPCs move, in creation order (sprites created this tick wait);
//! 3. spawn points fire;
//! 4. interaction rules are resolved in declaration order; a rule fires for every
//!    (actor, patient) pair sharing a cell at the moment it is examined;
//! 5. expired sprites are removed and termination rules are checked in declaration
//!    order, the first match deciding the episode.
//!
//! Only same-cell occupancy after movement triggers interactions: two sprites that swap
//! cells within a tick never meet.

mod game;
mod state;

use thiserror::Error;

pub use game::{
    CompiledEffect, CompiledRule, CompiledTermination, Game, Patient, TypeId, TypeInfo,
};
pub use state::{
    episode_rng_seed, init_episode, unit_draw, EpisodeStatus, Event, Sprite, StateDigest,
    StepOutcome, WorldState,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("level {level} out of range (bundle has {count} levels)")]
    InvalidLevelIndex { level: usize, count: usize },
    #[error("episode already terminated")]
    EpisodeAlreadyTerminated,
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
}
