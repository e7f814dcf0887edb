use arena_core::engine::{EpisodeStatus, WorldState};
use arena_core::obs::ColorMap;
use serde::{Deserialize, Serialize};

/// One occupied cell layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryItem {
    pub color: String,
    pub count: u32,
}

/// What a client draws: the grid in color tokens, never type names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameView {
    pub width: i32,
    pub height: i32,
    /// Row-major, then palette order within a cell.
    pub cells: Vec<Cell>,
    pub inventory: Vec<InventoryItem>,
    pub score: i64,
    pub step: u32,
    pub level: usize,
    pub status: EpisodeStatus,
}

impl FrameView {
    pub fn new(state: &WorldState, cmap: &ColorMap) -> FrameView {
        let game = state.game();
        let color = |kind| cmap.color(&game.type_info(kind).name).unwrap_or("?");
        let mut cells: Vec<Cell> = state
            .live_sprites()
            .map(|s| Cell {
                x: s.pos.x,
                y: s.pos.y,
                color: color(s.kind).to_string(),
            })
            .collect();
        cells.sort_by_key(|c| (c.y, c.x, ColorMap::rank(&c.color)));
        let mut inventory: Vec<InventoryItem> = state
            .inventory()
            .iter()
            .filter(|(_, n)| **n > 0)
            .map(|(k, n)| InventoryItem {
                color: color(*k).to_string(),
                count: *n,
            })
            .collect();
        inventory.sort_by_key(|i| ColorMap::rank(&i.color));
        FrameView {
            width: state.width(),
            height: state.height(),
            cells,
            inventory,
            score: state.score(),
            step: state.step_index(),
            level: state.level(),
            status: state.status(),
        }
    }
}
