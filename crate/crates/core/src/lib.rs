//! Grid-world rule-discovery arena.
//!
//! Game descriptions are parsed ([`vgdl`]), simulated deterministically ([`engine`]),
//! rendered as anonymized text ([`obs`]) and played by agents under a curriculum
//! ([`runner`]). [`metrics`] turns the resulting traces into behavioral statistics.

pub mod action;
pub mod agent;
pub mod engine;
pub mod games;
pub mod metrics;
pub mod obs;
pub mod runner;
pub mod solver;
pub mod vgdl;

pub use action::{Action, Direction, Pos};
