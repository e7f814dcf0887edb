use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::vgdl::GameDescription;

use super::ObsError;

/// The fixed color vocabulary, in rendering order.
pub const PALETTE: [&str; 12] = [
    "DARKBLUE",
    "GREEN",
    "ORANGE",
    "GOLD",
    "RED",
    "PURPLE",
    "BROWN",
    "PINK",
    "LIGHTBLUE",
    "GRAY",
    "YELLOW",
    "WHITE",
];

/// Session-scoped bijection from type names to palette colors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<String, String>",
    into = "BTreeMap<String, String>"
)]
pub struct ColorMap {
    by_type: BTreeMap<String, &'static str>,
}

impl ColorMap {
    /// Shuffles the palette with `session_seed` and hands colors out in type
    /// declaration order (`wall` last).
    pub fn assign(desc: &GameDescription, session_seed: u64) -> Result<ColorMap, ObsError> {
        let names = desc.type_names();
        if names.len() > PALETTE.len() {
            return Err(ObsError::PaletteExhausted {
                types: names.len(),
                palette: PALETTE.len(),
            });
        }
        let mut palette = PALETTE;
        palette.shuffle(&mut ChaCha8Rng::seed_from_u64(session_seed));
        Ok(ColorMap {
            by_type: names
                .into_iter()
                .zip(palette)
                .map(|(n, c)| (n.to_string(), c))
                .collect(),
        })
    }

    /// Builds a map from explicit pairs; colors must be palette tokens, used once each.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<ColorMap, ObsError> {
        let mut by_type = BTreeMap::new();
        for (name, color) in pairs {
            let token = PALETTE
                .iter()
                .find(|c| **c == color)
                .ok_or_else(|| ObsError::UnknownColor(color.to_string()))?;
            if by_type.values().any(|c| c == token) {
                return Err(ObsError::DuplicateColor(color.to_string()));
            }
            by_type.insert(name.to_string(), *token);
        }
        Ok(ColorMap { by_type })
    }

    pub fn color(&self, type_name: &str) -> Option<&'static str> {
        self.by_type.get(type_name).copied()
    }

    /// Reverse lookup.
    pub fn type_of(&self, color: &str) -> Option<&str> {
        self.by_type
            .iter()
            .find(|(_, c)| **c == color)
            .map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &'static str)> {
        self.by_type.iter().map(|(n, c)| (n.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.by_type.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_type.is_empty()
    }

    /// Position of a color in [`PALETTE`]; unknown tokens sort last.
    pub fn rank(color: &str) -> usize {
        PALETTE
            .iter()
            .position(|c| *c == color)
            .unwrap_or(PALETTE.len())
    }
}

impl TryFrom<BTreeMap<String, String>> for ColorMap {
    type Error = ObsError;

    fn try_from(m: BTreeMap<String, String>) -> Result<Self, ObsError> {
        ColorMap::from_pairs(m.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

impl From<ColorMap> for BTreeMap<String, String> {
    fn from(m: ColorMap) -> Self {
        m.by_type
            .into_iter()
            .map(|(k, v)| (k, v.to_string()))
            .collect()
    }
}
