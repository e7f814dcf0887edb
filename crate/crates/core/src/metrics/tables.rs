use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::runner::{Protocol, SessionTrace};

use super::{mastery_k, quantile, MetricError};

/// Level-solve rate and discovery-step quartiles for one game (or `all`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRow {
    pub game: String,
    pub solved: usize,
    pub instances: usize,
    pub rate: f64,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

/// Per-game rows in name order, then an `all` row. Every trace contributes one
/// instance per level of its game, whether the level was reached or not.
pub fn solve_table(traces: &[SessionTrace]) -> Result<Vec<SolveRow>, MetricError> {
    if traces.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut groups: BTreeMap<String, (usize, usize, Vec<f64>)> = BTreeMap::new();
    for t in traces {
        let g = groups.entry(t.header.game.clone()).or_default();
        g.1 += t.header.bundle.levels.len();
        for r in t.level_records(mastery_k(t)) {
            if let Some(d) = r.discovery_steps {
                g.0 += 1;
                g.2.push(d as f64);
            }
        }
    }
    let row = |game: String, solved: usize, instances: usize, v: &[f64]| SolveRow {
        game,
        solved,
        instances,
        rate: if instances == 0 {
            0.0
        } else {
            solved as f64 / instances as f64
        },
        median: quantile(v, 0.5),
        q1: quantile(v, 0.25),
        q3: quantile(v, 0.75),
    };
    let mut rows = Vec::new();
    let (mut s, mut n, mut all) = (0, 0, Vec::new());
    for (game, (solved, instances, v)) in &groups {
        rows.push(row(game.clone(), *solved, *instances, v));
        s += solved;
        n += instances;
        all.extend_from_slice(v);
    }
    rows.push(row("all".into(), s, n, &all));
    Ok(rows)
}

/// Share of played levels left without a single win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvancementRow {
    pub game: String,
    pub unsolved: usize,
    pub played: usize,
    pub fraction: f64,
}

/// Per-game rows plus `all`, for traces where levels advance without mastery.
pub fn unsolved_advancement(traces: &[SessionTrace]) -> Result<Vec<AdvancementRow>, MetricError> {
    if traces.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if let Some(t) = traces
        .iter()
        .find(|t| t.header.run.protocol == Protocol::Blocked)
    {
        return Err(MetricError::ProtocolMismatch(format!(
            "{}/{}",
            t.header.agent.id, t.header.game
        )));
    }
    let mut groups: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for t in traces {
        let g = groups.entry(t.header.game.clone()).or_default();
        for r in t.level_records(mastery_k(t)) {
            g.1 += 1;
            if r.wins() == 0 {
                g.0 += 1;
            }
        }
    }
    let row = |game: String, unsolved: usize, played: usize| AdvancementRow {
        game,
        unsolved,
        played,
        fraction: if played == 0 {
            0.0
        } else {
            unsolved as f64 / played as f64
        },
    };
    let mut rows: Vec<AdvancementRow> = groups
        .iter()
        .map(|(g, (u, p))| row(g.clone(), *u, *p))
        .collect();
    let (u, p) = groups.values().fold((0, 0), |a, (u, p)| (a.0 + u, a.1 + p));
    rows.push(row("all".into(), u, p));
    Ok(rows)
}
