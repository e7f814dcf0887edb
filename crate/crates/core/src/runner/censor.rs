use std::collections::BTreeSet;

use crate::obs::TrialOutcome;

use super::{Censoring, SessionTrace, StepStatus};

/// Applies the mastery criterion after the fact.
///
/// Within each level, episodes after the first run of `k` consecutive wins are dropped.
/// Levels following the first level that was never mastered are dropped entirely and
/// listed in [`Censoring::censored_levels`]. Steps beyond `budget` are dropped and the
/// episode in flight at the budget becomes truncated. Cumulative step counts are
/// recomputed. Censoring a censored trace again with the same arguments changes nothing.
pub fn censor_trace(trace: &SessionTrace, k: u32, budget: u32) -> SessionTrace {
    let k = k.max(1);
    let mut out = trace.clone();
    out.steps.clear();

    let mut censored: BTreeSet<usize> = trace
        .header
        .censoring
        .iter()
        .flat_map(|c| c.censored_levels.iter().copied())
        .collect();
    let levels: BTreeSet<usize> = trace.steps.iter().map(|s| s.level).collect();
    let mut stop = false;
    let mut cum = 0u32;
    for &level in &levels {
        if stop {
            censored.insert(level);
            continue;
        }
        let (mut streak, mut mastered, mut kept) = (0, false, 0);
        for s in trace.steps.iter().filter(|s| s.level == level) {
            if mastered || cum >= budget {
                break;
            }
            cum += 1;
            kept += 1;
            let mut rec = s.clone();
            rec.cum_step = cum;
            if cum == budget && rec.status == StepStatus::Ongoing {
                rec.status = StepStatus::Truncated;
            }
            if let Some(o) = rec.status.outcome() {
                streak = if o == TrialOutcome::Won {
                    streak + 1
                } else {
                    0
                };
                mastered = streak >= k;
            }
            out.steps.push(rec);
        }
        if kept == 0 {
            censored.insert(level);
        }
        stop = !mastered;
    }
    out.header.censoring = Some(Censoring {
        consecutive_wins: k,
        budget,
        censored_levels: censored.into_iter().collect(),
    });
    out
}
