use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::MetricError;
use crate::runner::SessionTrace;
use crate::Action;

/// Trie edge: one action, or the end of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge<T> {
    Step(T),
    End,
}

#[derive(Debug, Clone)]
struct Node<T> {
    count: usize,
    children: BTreeMap<Edge<T>, usize>,
}

/// Shared-prefix trie over participants' action sequences. Each sequence is closed by
/// an [`Edge::End`], so a finished sequence that prefixes a longer one still separates.
#[derive(Debug, Clone)]
pub struct PrefixTrie<T> {
    nodes: Vec<Node<T>>,
    paths: Vec<Vec<usize>>,
}

impl<T: Ord + Clone> PrefixTrie<T> {
    pub fn build<S: AsRef<[T]>>(sequences: &[S]) -> Result<Self, MetricError> {
        if sequences.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        let mut nodes = vec![Node {
            count: 0,
            children: BTreeMap::new(),
        }];
        let mut paths = Vec::with_capacity(sequences.len());
        for seq in sequences {
            let mut cur = 0;
            nodes[0].count += 1;
            let mut path = Vec::new();
            let edges = seq
                .as_ref()
                .iter()
                .cloned()
                .map(Edge::Step)
                .chain(std::iter::once(Edge::End));
            for e in edges {
                let next = match nodes[cur].children.get(&e) {
                    Some(&n) => n,
                    None => {
                        nodes.push(Node {
                            count: 0,
                            children: BTreeMap::new(),
                        });
                        let n = nodes.len() - 1;
                        nodes[cur].children.insert(e, n);
                        n
                    }
                };
                nodes[next].count += 1;
                path.push(next);
                cur = next;
            }
            paths.push(path);
        }
        Ok(PrefixTrie { nodes, paths })
    }

    pub fn participants(&self) -> usize {
        self.paths.len()
    }

    /// Participants sharing the prefix along `edges` from the root.
    pub fn count(&self, edges: &[Edge<T>]) -> usize {
        let mut cur = 0;
        for e in edges {
            match self.nodes[cur].children.get(e) {
                Some(&n) => cur = n,
                None => return 0,
            }
        }
        self.nodes[cur].count
    }

    /// Depth (in edges) at which each participant's prefix is first held by nobody else,
    /// or `None` when the whole sequence is shared.
    pub fn isolation_depths(&self) -> Vec<Option<usize>> {
        self.paths
            .iter()
            .map(|p| {
                p.iter()
                    .position(|&n| self.nodes[n].count == 1)
                    .map(|i| i + 1)
            })
            .collect()
    }

    /// Checks that every node's count equals the sum of its children's.
    pub fn is_consistent(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.children.is_empty()
                || n.children
                    .values()
                    .map(|&c| self.nodes[c].count)
                    .sum::<usize>()
                    == n.count
        })
    }
}

/// Fraction of participants whose prefix of depth `d` is unique, for `d = 1..=max_depth`.
pub fn divergence_curve<T: Ord + Clone>(trie: &PrefixTrie<T>, max_depth: usize) -> Vec<f64> {
    let depths = trie.isolation_depths();
    let n = trie.participants() as f64;
    (1..=max_depth)
        .map(|d| depths.iter().filter(|x| x.is_some_and(|x| x <= d)).count() as f64 / n)
        .collect()
}

/// Actions of the first episode on `level` of `game`, one sequence per trace that
/// played that level.
pub fn first_attempts(traces: &[SessionTrace], game: &str, level: usize) -> Vec<Vec<Action>> {
    traces
        .iter()
        .filter(|t| t.header.game == game)
        .filter_map(|t| {
            let first = t.steps.iter().find(|s| s.level == level)?.ordinal;
            Some(
                t.steps
                    .iter()
                    .filter(|s| s.ordinal == first)
                    .map(|s| s.action)
                    .collect(),
            )
        })
        .collect()
}

/// Cohort summary of [`PrefixTrie::isolation_depths`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationSummary {
    pub participants: usize,
    /// Median depth, counting never-isolated participants as deeper than everyone else.
    /// `None` when the median falls on such a participant.
    pub median: Option<f64>,
    /// Participants isolated at or before `by` steps.
    pub unique_by: usize,
    pub by: usize,
}

pub fn isolation_summary(depths: &[Option<usize>], by: usize) -> IsolationSummary {
    let mut d: Vec<Option<usize>> = depths.to_vec();
    d.sort_by_key(|x| x.unwrap_or(usize::MAX));
    let n = d.len();
    let median = match n {
        0 => None,
        _ if n % 2 == 1 => d[n / 2].map(|x| x as f64),
        _ => d[n / 2 - 1]
            .zip(d[n / 2])
            .map(|(a, b)| (a + b) as f64 / 2.0),
    };
    IsolationSummary {
        participants: n,
        median,
        unique_by: d.iter().filter(|x| x.is_some_and(|x| x <= by)).count(),
        by,
    }
}
