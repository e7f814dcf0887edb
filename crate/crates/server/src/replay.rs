use std::fs;
use std::path::{Path, PathBuf};

use arena_core::runner::{frame_at, load_trace, Protocol, SessionTrace};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::frame::FrameView;

const SUFFIX: &str = ".trace.jsonl";

/// One trace file in the catalogue. `id` is the file name without its suffix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub id: String,
    pub game: String,
    pub agent: String,
    pub seed: u64,
    pub protocol: Protocol,
    pub steps: usize,
    pub finished: bool,
    /// Set when only a prefix of the file could be read.
    pub corrupt: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayFilter {
    pub game: Option<String>,
    pub agent: Option<String>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

fn path_of(dir: &Path, id: &str) -> Result<PathBuf, ApiError> {
    let path = dir.join(format!("{id}{SUFFIX}"));
    if !valid_id(id) || !path.is_file() {
        return Err(ApiError::UnknownReplay(id.to_string()));
    }
    Ok(path)
}

/// Lists traces in `dir`, sorted by id. Files without a readable header are skipped.
pub fn list_replays(dir: &Path, filter: &ReplayFilter) -> Result<Vec<ReplayEntry>, ApiError> {
    let read = fs::read_dir(dir).map_err(|e| ApiError::Internal(e.to_string()))?;
    let mut out = Vec::new();
    for entry in read.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(id) = name.strip_suffix(SUFFIX) else {
            continue;
        };
        let Ok((trace, err)) = load_trace(entry.path()) else {
            continue;
        };
        let h = &trace.header;
        if filter.game.as_ref().is_some_and(|g| *g != h.game)
            || filter.agent.as_ref().is_some_and(|a| *a != h.agent.id)
        {
            continue;
        }
        out.push(ReplayEntry {
            id: id.to_string(),
            game: h.game.clone(),
            agent: h.agent.id.clone(),
            seed: h.run.seed,
            protocol: h.run.protocol,
            steps: trace.steps.len(),
            finished: trace.end.is_some(),
            corrupt: err.is_some(),
        });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// Reads a whole trace; a damaged line anywhere is an error.
pub fn get_replay(dir: &Path, id: &str) -> Result<SessionTrace, ApiError> {
    let path = path_of(dir, id)?;
    match load_trace(path) {
        Ok((trace, None)) => Ok(trace),
        Ok((_, Some(e))) | Err(e) => Err(ApiError::CorruptTrace(e.to_string())),
    }
}

/// The frame before step record `step` (or after the last one), re-simulated from the
/// trace's seed with every stored digest checked on the way.
pub fn replay_frame(dir: &Path, id: &str, step: usize) -> Result<FrameView, ApiError> {
    let trace = get_replay(dir, id)?;
    let state = frame_at(&trace, step)?;
    Ok(FrameView::new(&state, &trace.header.color_map))
}
