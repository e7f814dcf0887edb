//! Breadth-first search for winning action sequences.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use crate::action::Action;
use crate::engine::{init_episode, EngineError, EpisodeStatus, Game, WorldState};

#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    pub max_depth: u32,
    pub max_states: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_depth: 200,
            max_states: 2_000_000,
        }
    }
}

/// Shortest action sequence that wins `level` from the episode seeded by `seed`, or
/// `None` if none exists within the limits. States are deduplicated on
/// [`WorldState::dynamics_key`], so stochastic games are searched under their fixed seed.
pub fn solve(
    game: &Arc<Game>,
    level: usize,
    seed: u64,
    limits: SolveLimits,
) -> Result<Option<Vec<Action>>, EngineError> {
    let start = init_episode(game, level, seed)?;
    let mut seen = HashSet::from([start.dynamics_key()]);
    // Parent links: (parent index, action).
    let mut nodes: Vec<(usize, Action)> = vec![(usize::MAX, Action::Wait)];
    let mut queue: VecDeque<(WorldState, usize, u32)> = VecDeque::from([(start, 0, 0)]);
    while let Some((state, node, depth)) = queue.pop_front() {
        if depth >= limits.max_depth {
            continue;
        }
        for act in Action::ALL {
            let mut next = state.clone();
            next.step(act)?;
            match next.status() {
                EpisodeStatus::Lost => continue,
                EpisodeStatus::Won => {
                    let mut path = vec![act];
                    let mut n = node;
                    while n != 0 {
                        path.push(nodes[n].1);
                        n = nodes[n].0;
                    }
                    path.reverse();
                    return Ok(Some(path));
                }
                EpisodeStatus::Ongoing => {}
            }
            if seen.len() >= limits.max_states || !seen.insert(next.dynamics_key()) {
                continue;
            }
            nodes.push((node, act));
            queue.push_back((next, nodes.len() - 1, depth + 1));
        }
    }
    Ok(None)
}

/// Plays `actions` from a fresh episode and returns the final state.
pub fn replay_actions(
    game: &Arc<Game>,
    level: usize,
    seed: u64,
    actions: &[Action],
) -> Result<WorldState, EngineError> {
    let mut s = init_episode(game, level, seed)?;
    for &a in actions {
        s.step(a)?;
    }
    Ok(s)
}
