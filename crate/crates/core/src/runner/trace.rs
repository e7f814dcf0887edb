use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Action;
use crate::agent::AgentDescriptor;
use crate::engine::StateDigest;
use crate::obs::{ColorMap, TrialOutcome};
use crate::vgdl::BundleSource;

use super::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to reproduce a session: game source, agent, config and colors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema_version: u32,
    pub game: String,
    pub agent: AgentDescriptor,
    pub run: RunConfig,
    pub color_map: ColorMap,
    pub prompt_version: String,
    pub bundle: BundleSource,
    pub started_at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censoring: Option<Censoring>,
}

/// Record of a [`censor_trace`](super::censor_trace) pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Censoring {
    pub consecutive_wins: u32,
    pub budget: u32,
    /// Levels removed entirely because an earlier level was never mastered.
    pub censored_levels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepStatus {
    Ongoing,
    Won,
    Lost,
    Truncated,
}

impl StepStatus {
    pub fn outcome(self) -> Option<TrialOutcome> {
        match self {
            StepStatus::Ongoing => None,
            StepStatus::Won => Some(TrialOutcome::Won),
            StepStatus::Lost => Some(TrialOutcome::Lost),
            StepStatus::Truncated => Some(TrialOutcome::Truncated),
        }
    }
}

/// One agent decision and its result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub level: usize,
    /// Episode index within the level.
    pub episode: u32,
    /// Episode index within the session; selects the episode's RNG stream.
    pub ordinal: u32,
    /// Episode step at which the observation was shown (0-based).
    pub step: u32,
    /// Session steps including this one.
    pub cum_step: u32,
    pub observation: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub reasoning_chars: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    pub latency_ms: u64,
    /// Score after the action.
    pub score: i64,
    pub status: StepStatus,
    pub pre_digest: StateDigest,
    pub digest: StateDigest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    AllLevelsDone,
    BudgetExhausted,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEnd {
    pub reason: EndReason,
    pub total_steps: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub finished_at_ms: u64,
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Step(StepRecord),
    End(TraceEnd),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub end: Option<TraceEnd>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub level: usize,
    pub episode: u32,
    pub ordinal: u32,
    pub outcome: TrialOutcome,
    pub steps: u32,
    pub score: i64,
    /// Session step count when the episode ended.
    pub end_cum_step: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    pub episodes: Vec<EpisodeSummary>,
    pub mastered: bool,
    /// Steps of every episode up to and including the first win.
    pub discovery_steps: Option<u32>,
    /// Steps of each win after the first.
    pub execution_steps: Vec<u32>,
}

impl LevelRecord {
    pub fn from_episodes(level: usize, episodes: Vec<EpisodeSummary>, k: u32) -> LevelRecord {
        let first_win = episodes.iter().position(|e| e.outcome == TrialOutcome::Won);
        let discovery_steps = first_win.map(|i| episodes[..=i].iter().map(|e| e.steps).sum());
        let execution_steps = first_win
            .map(|i| {
                episodes[i + 1..]
                    .iter()
                    .filter(|e| e.outcome == TrialOutcome::Won)
                    .map(|e| e.steps)
                    .collect()
            })
            .unwrap_or_default();
        let k = k as usize;
        let mastered = episodes.len() >= k
            && episodes[episodes.len() - k..]
                .iter()
                .all(|e| e.outcome == TrialOutcome::Won);
        LevelRecord {
            level,
            episodes,
            mastered,
            discovery_steps,
            execution_steps,
        }
    }

    pub fn wins(&self) -> usize {
        self.episodes
            .iter()
            .filter(|e| e.outcome == TrialOutcome::Won)
            .count()
    }
}

impl SessionTrace {
    pub fn total_steps(&self) -> u32 {
        self.steps.last().map_or(0, |s| s.cum_step)
    }

    /// Finished episodes in order. An episode cut short by an abort is left out.
    pub fn episodes(&self) -> Vec<EpisodeSummary> {
        let mut out = Vec::new();
        let mut len = 0;
        for s in &self.steps {
            len += 1;
            if let Some(outcome) = s.status.outcome() {
                out.push(EpisodeSummary {
                    level: s.level,
                    episode: s.episode,
                    ordinal: s.ordinal,
                    outcome,
                    steps: len,
                    score: s.score,
                    end_cum_step: s.cum_step,
                });
                len = 0;
            }
        }
        out
    }

    /// One record per level played, in level order, with mastery judged against `k`
    /// consecutive wins.
    pub fn level_records(&self, k: u32) -> Vec<LevelRecord> {
        let mut by_level: std::collections::BTreeMap<usize, Vec<EpisodeSummary>> =
            Default::default();
        for s in &self.steps {
            by_level.entry(s.level).or_default();
        }
        for e in self.episodes() {
            by_level.entry(e.level).or_default().push(e);
        }
        by_level
            .into_iter()
            .map(|(l, eps)| LevelRecord::from_episodes(l, eps, k))
            .collect()
    }

    /// Level records under the session's own advancement criterion.
    pub fn levels(&self) -> Vec<LevelRecord> {
        self.level_records(self.header.run.consecutive_wins_to_advance)
    }

    /// The trace as file lines: header, steps, then the end marker if present.
    pub fn lines(&self) -> impl Iterator<Item = TraceLine> + '_ {
        std::iter::once(TraceLine::Header(self.header.clone()))
            .chain(self.steps.iter().cloned().map(TraceLine::Step))
            .chain(self.end.iter().cloned().map(TraceLine::End))
    }

    /// Writes the whole trace to `path`, replacing any existing file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        let mut w = TraceWriter::create(path)?;
        for line in self.lines() {
            w.append(&line)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for line in self.lines() {
            out.push_str(&serde_json::to_string(&line).expect("trace lines serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt trace at line {line}: {reason}")]
    CorruptTrace { line: usize, reason: String },
}

/// Canonical trace file name for an (agent, game, seed) run.
pub fn trace_file_name(agent: &str, game: &str, seed: u64) -> String {
    let clean = |s: &str| {
        s.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                    c
                } else {
                    '-'
                }
            })
            .collect::<String>()
    };
    format!("{}__{}__seed{seed}.trace.jsonl", clean(agent), clean(game))
}

/// Loads a trace. On a malformed or truncated line the valid prefix is returned together
/// with the error for that line (1-based).
pub fn load_trace(
    path: impl AsRef<Path>,
) -> Result<(SessionTrace, Option<TraceError>), TraceError> {
    let file = File::open(path)?;
    parse_lines(BufReader::new(file))
}

pub(crate) fn parse_lines(
    reader: impl BufRead,
) -> Result<(SessionTrace, Option<TraceError>), TraceError> {
    let mut header = None;
    let mut steps = Vec::new();
    let mut end = None;
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| TraceError::CorruptTrace { line: n, reason };
        let parsed: TraceLine = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                let err = corrupt(e.to_string());
                return match header {
                    Some(header) => Ok((SessionTrace { header, steps, end }, Some(err))),
                    None => Err(err),
                };
            }
        };
        let misplaced = match (&parsed, &header, &end) {
            (TraceLine::Header(_), None, _) => None,
            (TraceLine::Header(_), Some(_), _) => Some("second header"),
            (_, None, _) => Some("missing header"),
            (_, _, Some(_)) => Some("line after end"),
            _ => None,
        };
        if let Some(reason) = misplaced {
            let err = corrupt(reason.to_string());
            return match header {
                Some(header) => Ok((SessionTrace { header, steps, end }, Some(err))),
                None => Err(err),
            };
        }
        match parsed {
            TraceLine::Header(h) => {
                if h.schema_version != SCHEMA_VERSION {
                    return Err(corrupt(format!(
                        "unsupported schema version {}",
                        h.schema_version
                    )));
                }
                header = Some(h)
            }
            TraceLine::Step(s) => steps.push(s),
            TraceLine::End(e) => end = Some(e),
        }
    }
    match header {
        Some(header) => Ok((SessionTrace { header, steps, end }, None)),
        None => Err(TraceError::CorruptTrace {
            line: 1,
            reason: "empty trace".into(),
        }),
    }
}

/// Append-only trace file. Each line is flushed as soon as it is written, so a crashed
/// session leaves a readable prefix.
pub struct TraceWriter {
    file: File,
}

impl TraceWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<TraceWriter, TraceError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(TraceWriter {
            file: File::create(&path)?,
        })
    }

    /// Opens an existing trace for appending after truncating it to `valid_len` bytes.
    pub fn append_to(path: impl AsRef<Path>, valid_len: u64) -> Result<TraceWriter, TraceError> {
        let path = path.as_ref();
        OpenOptions::new()
            .write(true)
            .open(path)?
            .set_len(valid_len)?;
        Ok(TraceWriter {
            file: OpenOptions::new().append(true).open(path)?,
        })
    }

    pub fn append(&mut self, line: &TraceLine) -> Result<(), TraceError> {
        let mut text = serde_json::to_string(line).expect("trace lines serialize");
        text.push('\n');
        self.file.write_all(text.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

/// Byte length of the valid prefix of a trace file holding `lines` good lines.
pub(crate) fn prefix_len(path: &Path, lines: usize) -> io::Result<u64> {
    let content = std::fs::read(path)?;
    let mut seen = 0;
    let mut len = 0u64;
    for chunk in content.split_inclusive(|b| *b == b'\n') {
        if seen == lines {
            break;
        }
        len += chunk.len() as u64;
        if !chunk.iter().all(|b| b.is_ascii_whitespace()) {
            seen += 1;
        }
    }
    Ok(len)
}
