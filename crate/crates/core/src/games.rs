//! The seven bundled games, embedded at compile time.

use std::sync::Arc;

use crate::engine::Game;
use crate::vgdl::{BundleError, BundleSource};

macro_rules! bundle {
    ($name:literal) => {
        (
            $name,
            include_str!(concat!("../../../games/", $name, "/game.vgdl")),
            [
                include_str!(concat!("../../../games/", $name, "/level_0.txt")),
                include_str!(concat!("../../../games/", $name, "/level_1.txt")),
                include_str!(concat!("../../../games/", $name, "/level_2.txt")),
                include_str!(concat!("../../../games/", $name, "/level_3.txt")),
                include_str!(concat!("../../../games/", $name, "/level_4.txt")),
                include_str!(concat!("../../../games/", $name, "/level_5.txt")),
                include_str!(concat!("../../../games/", $name, "/level_6.txt")),
                include_str!(concat!("../../../games/", $name, "/level_7.txt")),
                include_str!(concat!("../../../games/", $name, "/level_8.txt")),
            ],
        )
    };
}

type Embedded = (&'static str, &'static str, [&'static str; 9]);

static BUNDLES: [Embedded; 7] = [
    bundle!("bait"),
    bundle!("zelda"),
    bundle!("chase"),
    bundle!("helper"),
    bundle!("lemmings"),
    bundle!("avoidgeorge"),
    bundle!("plaqueattack"),
];

/// Names of the bundled games.
pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLES.iter().map(|b| b.0)
}

/// Source text of a bundled game.
pub fn source(name: &str) -> Option<BundleSource> {
    BUNDLES
        .iter()
        .find(|b| b.0 == name)
        .map(|(n, d, l)| BundleSource {
            name: n.to_string(),
            description: d.to_string(),
            levels: l.iter().map(|s| s.to_string()).collect(),
        })
}

/// Every bundled game's source, in a fixed order.
pub fn all_sources() -> Vec<BundleSource> {
    names().filter_map(source).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("no bundled game named `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
}

/// Compiles a bundled game, ready to simulate.
pub fn load(name: &str) -> Result<Arc<Game>, LoadError> {
    let src = source(name).ok_or_else(|| LoadError::Unknown(name.to_string()))?;
    Ok(Game::new(src.compile()?)?)
}
