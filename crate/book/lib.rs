//! Every chapter of the guide, so `cargo test` runs its code samples.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("src/games.md")]
pub mod games {}

#[doc = include_str!("src/engine.md")]
pub mod engine {}

#[doc = include_str!("src/observations.md")]
pub mod observations {}

#[doc = include_str!("src/curriculum.md")]
pub mod curriculum {}

#[doc = include_str!("src/agents.md")]
pub mod agents {}

#[doc = include_str!("src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("src/cli.md")]
pub mod cli {}

#[doc = include_str!("src/server.md")]
pub mod server {}
