use serde::{Deserialize, Serialize};

use crate::obs::TrialOutcome;
use crate::runner::SessionTrace;

use super::{sample_std, MetricError};

/// Mean level reached (levels mastered so far) against cumulative steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressionCurve {
    pub steps: Vec<u32>,
    pub mean: Vec<f64>,
    pub sem: Vec<f64>,
}

/// Cumulative steps at which each level was mastered (`k` wins in a row), in order.
pub fn mastery_steps(trace: &SessionTrace, k: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut level = None;
    let mut streak = 0;
    for e in trace.episodes() {
        if level != Some(e.level) {
            level = Some(e.level);
            streak = 0;
        }
        streak = if e.outcome == TrialOutcome::Won {
            streak + 1
        } else {
            0
        };
        if streak == k {
            out.push(e.end_cum_step);
        }
    }
    out
}

/// Averages each trace's level-versus-step staircase over `grid`. A trace that stalls
/// keeps its last level through the end of the grid. The SEM uses the n−1 standard
/// deviation and is 0 for a single trace.
pub fn progression_curve(
    traces: &[SessionTrace],
    grid: &[u32],
) -> Result<ProgressionCurve, MetricError> {
    if traces.is_empty() || grid.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let stairs: Vec<Vec<u32>> = traces
        .iter()
        .map(|t| mastery_steps(t, t.header.run.consecutive_wins_to_advance))
        .collect();
    let n = traces.len() as f64;
    let mut curve = ProgressionCurve {
        steps: grid.to_vec(),
        mean: Vec::with_capacity(grid.len()),
        sem: Vec::with_capacity(grid.len()),
    };
    for &t in grid {
        let levels: Vec<f64> = stairs
            .iter()
            .map(|m| m.iter().filter(|&&s| s <= t).count() as f64)
            .collect();
        curve.mean.push(levels.iter().sum::<f64>() / n);
        curve.sem.push(sample_std(&levels) / n.sqrt());
    }
    Ok(curve)
}
