#![allow(dead_code)]

use arena_core::agent::ScriptedAgent;
use arena_core::engine::StateDigest;
use arena_core::runner::*;
use arena_core::Action;

pub use arena_testkit::fixtures::corridor;

/// A fixed-window corridor trace with every step removed, for synthesizing episodes.
pub fn base() -> SessionTrace {
    let mut t = run_session(
        &corridor(),
        RunConfig {
            protocol: Protocol::FixedWindow,
            ..Default::default()
        },
        &mut ScriptedAgent::constant(Action::Wait),
        None,
    )
    .unwrap();
    t.steps.clear();
    t
}

/// Appends an episode of `len` steps ending in `end` on `level`.
pub fn episode(t: &mut SessionTrace, level: usize, len: u32, end: StepStatus) {
    let ordinal = t.steps.last().map_or(0, |s| s.ordinal + 1);
    let episode = t
        .steps
        .iter()
        .filter(|s| s.level == level)
        .map(|s| s.episode + 1)
        .max()
        .unwrap_or(0);
    for i in 0..len {
        let cum_step = t.total_steps() + 1;
        t.steps.push(StepRecord {
            level,
            episode,
            ordinal,
            step: i,
            cum_step,
            observation: String::new(),
            action: Action::Wait,
            rationale: None,
            reasoning_chars: 0,
            raw: None,
            latency_ms: 0,
            score: 0,
            status: if i + 1 == len {
                end
            } else {
                StepStatus::Ongoing
            },
            pre_digest: StateDigest(0),
            digest: StateDigest(0),
        });
    }
}
