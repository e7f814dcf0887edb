use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::layout::{parse_level_layout, LayoutError, LevelLayout};
use super::model::GameDescription;
use super::parse::{parse_game_description, ParseError};

/// Levels per game.
pub const LEVELS_PER_GAME: usize = 9;

/// Unparsed bundle text: a description plus one layout per level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleSource {
    pub name: String,
    pub description: String,
    pub levels: Vec<String>,
}

/// A validated game: parsed description and exactly nine parsed levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameBundle {
    pub name: String,
    pub description: GameDescription,
    pub levels: Vec<LevelLayout>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "detail")]
pub enum DiagnosticKind {
    Description(ParseError),
    Layout(LayoutError),
    WrongLevelCount { found: usize },
}

/// One validation finding. `level` is `None` for description and bundle-wide problems;
/// for description errors `row` holds the 1-based source line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub level: Option<usize>,
    pub row: usize,
    pub col: usize,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DiagnosticKind::Description(e) => write!(f, "game.vgdl: {e}"),
            DiagnosticKind::Layout(e) => {
                write!(f, "level_{}.txt: {e}", self.level.unwrap_or_default())
            }
            DiagnosticKind::WrongLevelCount { found } => {
                write!(f, "expected {LEVELS_PER_GAME} levels, found {found}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("reading bundle {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bundle `{name}` is invalid: {}", .diagnostics.first().map(|d| d.to_string()).unwrap_or_default())]
    Invalid {
        name: String,
        diagnostics: Vec<Diagnostic>,
    },
}

/// Checks a bundle; empty output means every level parses under the description.
/// Diagnostics are sorted by (level, row, col), bundle-wide ones first.
pub fn validate_bundle(source: &BundleSource) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if source.levels.len() != LEVELS_PER_GAME {
        out.push(Diagnostic {
            level: None,
            row: 0,
            col: 0,
            kind: DiagnosticKind::WrongLevelCount {
                found: source.levels.len(),
            },
        });
    }
    let desc = match parse_game_description(&source.description) {
        Ok(d) => d,
        Err(e) => {
            out.push(Diagnostic {
                level: None,
                row: e.line().unwrap_or(0),
                col: 0,
                kind: DiagnosticKind::Description(e),
            });
            out.sort_by_key(|d| (d.level, d.row, d.col));
            return out;
        }
    };
    for (i, text) in source.levels.iter().enumerate() {
        if let Err(e) = parse_level_layout(text, &desc) {
            let (row, col) = e.location();
            out.push(Diagnostic {
                level: Some(i),
                row,
                col,
                kind: DiagnosticKind::Layout(e),
            });
        }
    }
    out.sort_by_key(|d| (d.level, d.row, d.col));
    out
}

impl BundleSource {
    /// Reads `game.vgdl` and `level_0.txt`, `level_1.txt`, ... from a directory. The
    /// bundle name is the directory name.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<BundleSource, BundleError> {
        let dir = dir.as_ref();
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| BundleError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let description = read(&dir.join("game.vgdl"))?;
        let mut levels = Vec::new();
        loop {
            let p = dir.join(format!("level_{}.txt", levels.len()));
            if !p.exists() {
                break;
            }
            levels.push(read(&p)?);
        }
        let name = dir
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| dir.display().to_string());
        Ok(BundleSource {
            name,
            description,
            levels,
        })
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("game.vgdl"), &self.description)?;
        for (i, l) in self.levels.iter().enumerate() {
            fs::write(dir.join(format!("level_{i}.txt")), l)?;
        }
        Ok(())
    }

    /// Validates and parses.
    pub fn compile(&self) -> Result<GameBundle, BundleError> {
        let diagnostics = validate_bundle(self);
        if !diagnostics.is_empty() {
            return Err(BundleError::Invalid {
                name: self.name.clone(),
                diagnostics,
            });
        }
        let description =
            parse_game_description(&self.description).expect("validated description parses");
        let levels = self
            .levels
            .iter()
            .map(|l| parse_level_layout(l, &description).expect("validated level parses"))
            .collect();
        Ok(GameBundle {
            name: self.name.clone(),
            description,
            levels,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source(levels: usize) -> BundleSource {
        BundleSource {
            name: "t".into(),
            description: "sprite a > MovingAvatar\nmap @ > a\nmap w > wall\n\
                          interact a wall > stepBack\n\
                          terminate > Timeout steps=5 win\n\
                          terminate > SpriteCounter type=a limit=0 lose\n"
                .into(),
            levels: vec!["www\nw@w\nwww\n".to_string(); levels],
        }
    }

    #[test]
    fn nine_levels_validate() {
        assert!(validate_bundle(&source(9)).is_empty());
        assert_eq!(source(9).compile().unwrap().levels.len(), 9);
    }

    #[test]
    fn eight_levels() {
        let d = validate_bundle(&source(8));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::WrongLevelCount { found: 8 });
    }

    #[test]
    fn diagnostics_ordered_by_level_row_col() {
        let mut s = source(9);
        s.levels[5] = "www\nwZw\nwww\n".into();
        s.levels[2] = "www\nw@w\nwQw\n".into();
        let d = validate_bundle(&s);
        let keys: Vec<_> = d.iter().map(|d| (d.level, d.row, d.col)).collect();
        assert_eq!(keys, vec![(Some(2), 2, 1), (Some(5), 1, 1)]);
        assert!(matches!(
            d[0].kind,
            DiagnosticKind::Layout(LayoutError::UnknownLayoutChar { ch: 'Q', .. })
        ));
    }
}
