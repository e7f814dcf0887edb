use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::GameDescription;
use crate::action::Pos;

/// A rectangular character grid. Blank cells are ` ` or `.` unless the mapping claims them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelLayout {
    pub width: usize,
    pub height: usize,
    pub rows: Vec<String>,
}

/// Layout errors. Rows and columns are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum LayoutError {
    #[error("empty layout")]
    Empty,
    #[error("row {row} has width {found}, expected {expected}")]
    RaggedGrid {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown layout character `{ch}` at row {row}, column {col}")]
    UnknownLayoutChar { ch: char, row: usize, col: usize },
    #[error("no avatar in layout")]
    NoAvatar,
    #[error("second avatar at row {row}, column {col}")]
    MultipleAvatars { row: usize, col: usize },
}

impl LayoutError {
    pub fn location(&self) -> (usize, usize) {
        match self {
            LayoutError::RaggedGrid { row, .. } => (*row, 0),
            LayoutError::UnknownLayoutChar { row, col, .. }
            | LayoutError::MultipleAvatars { row, col } => (*row, *col),
            LayoutError::Empty | LayoutError::NoAvatar => (0, 0),
        }
    }
}

pub fn is_blank(ch: char, mapping: &BTreeMap<char, Vec<String>>) -> bool {
    (ch == ' ' || ch == '.') && !mapping.contains_key(&ch)
}

/// Parses a level grid against a description's character mapping.
pub fn parse_level_layout(text: &str, desc: &GameDescription) -> Result<LevelLayout, LayoutError> {
    let mut rows: Vec<String> = text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect();
    while rows.last().is_some_and(|r| r.trim().is_empty()) {
        rows.pop();
    }
    if rows.is_empty() {
        return Err(LayoutError::Empty);
    }
    let width = rows[0].chars().count();
    if width == 0 {
        return Err(LayoutError::Empty);
    }
    let avatar = desc.avatar().name.as_str();
    let mut avatar_at = None;
    for (row, line) in rows.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(LayoutError::RaggedGrid {
                row,
                expected: width,
                found,
            });
        }
        for (col, ch) in line.chars().enumerate() {
            if is_blank(ch, &desc.level_mapping) {
                continue;
            }
            let names = desc
                .level_mapping
                .get(&ch)
                .ok_or(LayoutError::UnknownLayoutChar { ch, row, col })?;
            for _ in names.iter().filter(|n| n.as_str() == avatar) {
                if avatar_at.is_some() {
                    return Err(LayoutError::MultipleAvatars { row, col });
                }
                avatar_at = Some((row, col));
            }
        }
    }
    if avatar_at.is_none() {
        return Err(LayoutError::NoAvatar);
    }
    Ok(LevelLayout {
        width,
        height: rows.len(),
        rows,
    })
}

impl LevelLayout {
    /// Sprite placements in row-major order, mapping order within a cell.
    pub fn placements<'a>(
        &'a self,
        desc: &'a GameDescription,
    ) -> impl Iterator<Item = (Pos, &'a str)> + 'a {
        self.rows.iter().enumerate().flat_map(move |(y, line)| {
            line.chars().enumerate().flat_map(move |(x, ch)| {
                let names: &[String] = if is_blank(ch, &desc.level_mapping) {
                    &[]
                } else {
                    desc.level_mapping
                        .get(&ch)
                        .map(Vec::as_slice)
                        .unwrap_or(&[])
                };
                names
                    .iter()
                    .map(move |n| (Pos::new(x as i32, y as i32), n.as_str()))
            })
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = self.rows.join("\n");
        s.push('\n');
        s
    }
}
