//! Game descriptions: data model, parser, printer, level layouts and bundles.

mod bundle;
mod layout;
mod model;
mod parse;
mod print;

pub use bundle::{
    validate_bundle, BundleError, BundleSource, Diagnostic, DiagnosticKind, GameBundle,
    LEVELS_PER_GAME,
};
pub use layout::{parse_level_layout, LayoutError, LevelLayout};
pub use model::*;
pub use parse::{parse_game_description, ParseError};
pub use print::{print_game_description, print_with_names};
