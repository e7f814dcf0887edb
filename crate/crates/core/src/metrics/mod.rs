//! Behavioral statistics over session traces.
//!
//! Step counts are compared on a natural-log axis throughout.

mod density;
mod distance;
mod progression;
mod survival;
mod tables;
mod trie;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runner::SessionTrace;

pub use density::{kde_curve, log_grid, silverman_bandwidth, KdeCurve};
pub use distance::{log_emd, log_emd_values, wasserstein1};
pub use progression::{mastery_steps, progression_curve, ProgressionCurve};
pub use survival::{km_curve, KmCurve};
pub use tables::{solve_table, unsolved_advancement, AdvancementRow, SolveRow};
pub use trie::{
    divergence_curve, first_attempts, isolation_summary, Edge, IsolationSummary, PrefixTrie,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no data")]
    EmptyInput,
    #[error("step counts must be positive and finite")]
    InvalidValue,
    #[error("trace {0} uses the blocked protocol; advancement without a win is impossible there")]
    ProtocolMismatch(String),
}

/// Which traces and levels a sample covers. `None` matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strata {
    pub agent: Option<String>,
    pub game: Option<String>,
    pub level: Option<usize>,
}

impl Strata {
    pub fn all() -> Strata {
        Strata::default()
    }

    pub fn game(game: &str) -> Strata {
        Strata {
            game: Some(game.into()),
            ..Strata::default()
        }
    }

    pub fn matches_trace(&self, t: &SessionTrace) -> bool {
        self.agent.as_ref().is_none_or(|a| *a == t.header.agent.id)
            && self.game.as_ref().is_none_or(|g| *g == t.header.game)
    }

    pub fn matches_level(&self, level: usize) -> bool {
        self.level.is_none_or(|l| l == level)
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}",
            self.agent.as_deref().unwrap_or("*"),
            self.game.as_deref().unwrap_or("*"),
            self.level.map_or("*".to_string(), |l| l.to_string())
        )
    }
}

/// A KM observation: the step at which a level was solved, or at which observation
/// stopped without a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmObservation {
    pub step: f64,
    pub solved: bool,
}

/// Step counts for one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub label: String,
    pub values: Vec<f64>,
    /// Solved and unsolved (trace, level) pairs that were played, for KM curves.
    pub observations: Vec<KmObservation>,
    /// (trace, level) pairs in the stratum, solved or not, played or not.
    pub denominator: usize,
}

fn mastery_k(t: &SessionTrace) -> u32 {
    t.header
        .censoring
        .as_ref()
        .map_or(t.header.run.consecutive_wins_to_advance, |c| {
            c.consecutive_wins
        })
}

/// Cumulative steps to the first win, one value per solved (trace, level). Unsolved
/// levels add to the denominator, and played ones become censored KM observations.
pub fn discovery_times(
    traces: &[SessionTrace],
    strata: &Strata,
) -> Result<MetricSample, MetricError> {
    let mut s = MetricSample {
        label: strata.label(),
        values: Vec::new(),
        observations: Vec::new(),
        denominator: 0,
    };
    for t in traces.iter().filter(|t| strata.matches_trace(t)) {
        let records = t.level_records(mastery_k(t));
        for level in (0..t.header.bundle.levels.len()).filter(|l| strata.matches_level(*l)) {
            s.denominator += 1;
            let Some(r) = records.iter().find(|r| r.level == level) else {
                continue;
            };
            match r.discovery_steps {
                Some(v) => {
                    s.values.push(v as f64);
                    s.observations.push(KmObservation {
                        step: v as f64,
                        solved: true,
                    });
                }
                None => {
                    let played: u32 = r.episodes.iter().map(|e| e.steps).sum();
                    if played > 0 {
                        s.observations.push(KmObservation {
                            step: played as f64,
                            solved: false,
                        });
                    }
                }
            }
        }
    }
    if s.denominator == 0 {
        return Err(MetricError::EmptyInput);
    }
    Ok(s)
}

/// Steps of every win after the first on each level.
pub fn execution_times(
    traces: &[SessionTrace],
    strata: &Strata,
) -> Result<MetricSample, MetricError> {
    let mut s = MetricSample {
        label: strata.label(),
        values: Vec::new(),
        observations: Vec::new(),
        denominator: 0,
    };
    for t in traces.iter().filter(|t| strata.matches_trace(t)) {
        for r in t.level_records(mastery_k(t)) {
            if strata.matches_level(r.level) {
                s.denominator += 1;
                s.values.extend(r.execution_steps.iter().map(|&v| v as f64));
            }
        }
    }
    if s.denominator == 0 {
        return Err(MetricError::EmptyInput);
    }
    Ok(s)
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

fn logs(values: &[f64]) -> Result<Vec<f64>, MetricError> {
    if values.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    values
        .iter()
        .map(|&v| {
            if v > 0.0 && v.is_finite() {
                Ok(v.ln())
            } else {
                Err(MetricError::InvalidValue)
            }
        })
        .collect()
}
