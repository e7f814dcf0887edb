//! Anonymized text rendering: color maps, observations and system prompts.
//!
//! Agents never see internal type names. Every sprite type is shown as a color token and
//! the avatar is not singled out.

mod colors;
mod prompt;
mod render;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use colors::{ColorMap, PALETTE};
pub use prompt::{render_system_prompt, SuggestionLevel, PROMPT_VERSION};
pub use render::render_observation;

/// How an episode ended, as reported to agents and stored in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialOutcome {
    Won,
    Lost,
    /// Cut off by a step cap or window boundary.
    Truncated,
}

impl TrialOutcome {
    pub fn token(self) -> &'static str {
        match self {
            TrialOutcome::Won => "won",
            TrialOutcome::Lost => "lost",
            TrialOutcome::Truncated => "truncated",
        }
    }
}

/// Outcome and final score of the previous episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LastTrial {
    pub outcome: TrialOutcome,
    pub score: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObsError {
    #[error("{types} sprite types but only {palette} colors")]
    PaletteExhausted { types: usize, palette: usize },
    #[error("`{0}` is not a palette color")]
    UnknownColor(String),
    #[error("color {0} assigned twice")]
    DuplicateColor(String),
}
