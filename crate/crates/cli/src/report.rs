//! `arena metrics`: tables and curve files from a directory of traces.
//!
//! Traces are grouped by agent id; traces from `--human-traces` form the `human` group.
//! Every file is CSV with a header row.
//!
//! | file | columns |
//! |---|---|
//! | `solve_table.csv` | view, group, game, solved, instances, rate, median, q1, q3 |
//! | `emd.csv` | group, reference, game, metric, n, n_reference, log_emd |
//! | `kde.csv` | group, game, metric, log_step, density |
//! | `km.csv` | group, game, step, solved |
//! | `progression.csv` | group, step, mean, sem |
//! | `divergence.csv` | group, game, level, depth, unique_fraction |
//! | `isolation.csv` | group, game, level, participants, median_depth, unique_by_5 |
//! | `advancement.csv` | group, game, unsolved, played, fraction |
//!
//! `view` is `censored` (mastery criterion applied with each trace's own `k` and budget)
//! or `raw`. All other tables use censored traces, except the trie files, which use each
//! trace's first attempt on a level, and `advancement.csv`, which is written only for
//! groups with no blocked-protocol traces.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use arena_core::metrics::{
    discovery_times, divergence_curve, execution_times, first_attempts, isolation_summary,
    kde_curve, km_curve, log_emd, log_grid, progression_curve, solve_table, unsolved_advancement,
    MetricError, MetricSample, PrefixTrie, Strata,
};
use arena_core::runner::{censor_trace, load_trace, Protocol, SessionTrace};
use serde::Serialize;

use crate::CliError;

pub const HUMAN: &str = "human";
pub const KDE_POINTS: usize = 200;
pub const PROGRESSION_STRIDE: u32 = 10;
pub const TRIE_DEPTH: usize = 30;
pub const UNIQUE_BY: usize = 5;

/// Traces that share an agent id.
#[derive(Debug, Clone)]
pub struct Group {
    pub label: String,
    pub raw: Vec<SessionTrace>,
    pub censored: Vec<SessionTrace>,
}

impl Group {
    pub fn new(label: impl Into<String>, raw: Vec<SessionTrace>) -> Group {
        let censored = raw
            .iter()
            .map(|t| {
                censor_trace(
                    t,
                    t.header.run.consecutive_wins_to_advance,
                    t.header.run.global_step_budget,
                )
            })
            .collect();
        Group {
            label: label.into(),
            raw,
            censored,
        }
    }

    fn games(&self) -> Vec<String> {
        let mut g: Vec<String> = self.raw.iter().map(|t| t.header.game.clone()).collect();
        g.sort();
        g.dedup();
        g
    }
}

/// A trace file whose tail could not be read. The valid prefix is still used.
#[derive(Debug, Clone, Serialize)]
pub struct Warning {
    pub file: PathBuf,
    pub message: String,
}

/// Loads every `*.trace.jsonl` under `dir` (not recursive), sorted by file name.
pub fn load_dir(dir: &Path) -> Result<(Vec<SessionTrace>, Vec<Warning>), CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::failed("io_error", format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".trace.jsonl"))
        .collect();
    files.sort();
    let (mut traces, mut warnings) = (Vec::new(), Vec::new());
    for f in files {
        match load_trace(&f) {
            Ok((t, err)) => {
                if let Some(e) = err {
                    warnings.push(Warning {
                        file: f.clone(),
                        message: e.to_string(),
                    });
                }
                traces.push(t);
            }
            Err(e) => warnings.push(Warning {
                file: f.clone(),
                message: e.to_string(),
            }),
        }
    }
    Ok((traces, warnings))
}

/// Splits agent traces by agent id and appends the human group, if any.
pub fn group(agent_traces: Vec<SessionTrace>, human: Vec<SessionTrace>) -> Vec<Group> {
    let mut by: BTreeMap<String, Vec<SessionTrace>> = BTreeMap::new();
    for t in agent_traces {
        by.entry(t.header.agent.id.clone()).or_default().push(t);
    }
    let mut groups: Vec<Group> = by.into_iter().map(|(k, v)| Group::new(k, v)).collect();
    if !human.is_empty() {
        groups.push(Group::new(HUMAN, human));
    }
    groups
}

/// What `arena metrics` printed.
#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub groups: Vec<(String, usize)>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<Warning>,
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::failed("io_error", e.to_string())
}

struct Table {
    path: PathBuf,
    w: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Table, CliError> {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        Ok(Table { path, w })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.w.write_record(fields).map_err(io)
    }

    fn finish(mut self) -> Result<PathBuf, CliError> {
        self.w.flush().map_err(io)?;
        Ok(self.path)
    }
}

/// Shortest round-trip form, in exponent notation below 1e-6.
fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-6 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn strata(game: &str) -> Strata {
    match game {
        "all" => Strata::all(),
        g => Strata::game(g),
    }
}

fn with_all(games: Vec<String>) -> Vec<String> {
    let mut g = games;
    g.push("all".into());
    g
}

type Metric = fn(&[SessionTrace], &Strata) -> Result<MetricSample, MetricError>;
const METRICS: [(&str, Metric); 2] = [
    ("discovery", discovery_times),
    ("execution", execution_times),
];

fn sample(g: &Group, game: &str, metric: Metric) -> Option<MetricSample> {
    metric(&g.censored, &strata(game))
        .ok()
        .filter(|s| !s.values.is_empty())
}

/// Writes all report files into `out` and returns their paths.
pub fn write_report(groups: &[Group], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    if groups.is_empty() {
        return Err(CliError::failed("empty_input", "no traces found"));
    }
    fs::create_dir_all(out).map_err(io)?;
    let mut files = Vec::new();

    let mut t = Table::create(
        out,
        "solve_table.csv",
        &[
            "view",
            "group",
            "game",
            "solved",
            "instances",
            "rate",
            "median",
            "q1",
            "q3",
        ],
    )?;
    for g in groups {
        for (view, traces) in [("censored", &g.censored), ("raw", &g.raw)] {
            for r in solve_table(traces).map_err(metric_err)? {
                t.row(&[
                    view.into(),
                    g.label.clone(),
                    r.game,
                    r.solved.to_string(),
                    r.instances.to_string(),
                    num(r.rate),
                    opt(r.median),
                    opt(r.q1),
                    opt(r.q3),
                ])?;
            }
        }
    }
    files.push(t.finish()?);

    let human = groups.iter().find(|g| g.label == HUMAN);
    let mut pairs: Vec<(&Group, &Group)> = Vec::new();
    match human {
        Some(h) => pairs.extend(groups.iter().filter(|g| g.label != HUMAN).map(|g| (g, h))),
        None => {
            for (i, a) in groups.iter().enumerate() {
                pairs.extend(groups[i + 1..].iter().map(|b| (a, b)));
            }
        }
    }
    let mut t = Table::create(
        out,
        "emd.csv",
        &[
            "group",
            "reference",
            "game",
            "metric",
            "n",
            "n_reference",
            "log_emd",
        ],
    )?;
    for (a, b) in pairs {
        let games: Vec<String> = a
            .games()
            .into_iter()
            .filter(|g| b.games().contains(g))
            .collect();
        for game in with_all(games) {
            for (name, metric) in METRICS {
                let (Some(x), Some(y)) = (sample(a, &game, metric), sample(b, &game, metric))
                else {
                    continue;
                };
                let d = log_emd(&x, &y).map_err(metric_err)?;
                t.row(&[
                    a.label.clone(),
                    b.label.clone(),
                    game.clone(),
                    name.into(),
                    x.values.len().to_string(),
                    y.values.len().to_string(),
                    num(d),
                ])?;
            }
        }
    }
    files.push(t.finish()?);

    let top = groups
        .iter()
        .flat_map(|g| {
            METRICS
                .iter()
                .filter_map(move |(_, m)| sample(g, "all", *m))
        })
        .flat_map(|s| s.values)
        .fold(1.0f64, f64::max);
    let grid = log_grid(0.0, top.ln() + 1.0, KDE_POINTS);
    let mut t = Table::create(
        out,
        "kde.csv",
        &["group", "game", "metric", "log_step", "density"],
    )?;
    for g in groups {
        for game in with_all(g.games()) {
            for (name, metric) in METRICS {
                let Some(s) = sample(g, &game, metric) else {
                    continue;
                };
                let c = kde_curve(&s, &grid).map_err(metric_err)?;
                for (x, y) in c.grid.iter().zip(&c.density) {
                    t.row(&[g.label.clone(), game.clone(), name.into(), num(*x), num(*y)])?;
                }
            }
        }
    }
    files.push(t.finish()?);

    let mut t = Table::create(out, "km.csv", &["group", "game", "step", "solved"])?;
    for g in groups {
        for game in with_all(g.games()) {
            let Ok(s) = discovery_times(&g.censored, &strata(&game)) else {
                continue;
            };
            let Ok(c) = km_curve(&s.observations) else {
                continue;
            };
            for (x, y) in c.steps.iter().zip(&c.solved) {
                t.row(&[g.label.clone(), game.clone(), num(*x), num(*y)])?;
            }
        }
    }
    files.push(t.finish()?);

    let mut t = Table::create(out, "progression.csv", &["group", "step", "mean", "sem"])?;
    for g in groups {
        let budget = g
            .raw
            .iter()
            .map(|t| t.header.run.global_step_budget)
            .max()
            .unwrap_or(0);
        let steps: Vec<u32> = (0..=budget).step_by(PROGRESSION_STRIDE as usize).collect();
        let c = progression_curve(&g.censored, &steps).map_err(metric_err)?;
        for i in 0..c.steps.len() {
            t.row(&[
                g.label.clone(),
                c.steps[i].to_string(),
                num(c.mean[i]),
                num(c.sem[i]),
            ])?;
        }
    }
    files.push(t.finish()?);

    let mut div = Table::create(
        out,
        "divergence.csv",
        &["group", "game", "level", "depth", "unique_fraction"],
    )?;
    let by = format!("unique_by_{UNIQUE_BY}");
    let mut iso = Table::create(
        out,
        "isolation.csv",
        &[
            "group",
            "game",
            "level",
            "participants",
            "median_depth",
            by.as_str(),
        ],
    )?;
    for g in groups {
        for game in g.games() {
            let levels = g
                .raw
                .iter()
                .filter(|t| t.header.game == game)
                .map(|t| t.header.bundle.levels.len())
                .max()
                .unwrap_or(0);
            for level in 0..levels {
                let seqs = first_attempts(&g.raw, &game, level);
                let Ok(trie) = PrefixTrie::build(&seqs) else {
                    continue;
                };
                for (d, f) in divergence_curve(&trie, TRIE_DEPTH).iter().enumerate() {
                    div.row(&[
                        g.label.clone(),
                        game.clone(),
                        level.to_string(),
                        (d + 1).to_string(),
                        num(*f),
                    ])?;
                }
                let s = isolation_summary(&trie.isolation_depths(), UNIQUE_BY);
                iso.row(&[
                    g.label.clone(),
                    game.clone(),
                    level.to_string(),
                    s.participants.to_string(),
                    opt(s.median),
                    s.unique_by.to_string(),
                ])?;
            }
        }
    }
    files.push(div.finish()?);
    files.push(iso.finish()?);

    let mut t = Table::create(
        out,
        "advancement.csv",
        &["group", "game", "unsolved", "played", "fraction"],
    )?;
    for g in groups.iter().filter(|g| {
        g.raw
            .iter()
            .all(|t| t.header.run.protocol != Protocol::Blocked)
    }) {
        for r in unsolved_advancement(&g.raw).map_err(metric_err)? {
            t.row(&[
                g.label.clone(),
                r.game,
                r.unsolved.to_string(),
                r.played.to_string(),
                num(r.fraction),
            ])?;
        }
    }
    files.push(t.finish()?);
    Ok(files)
}

fn metric_err(e: MetricError) -> CliError {
    CliError::failed("metric_error", e.to_string())
}

/// Loads both directories, groups and writes the report.
pub fn run_metrics(
    traces: &Path,
    human: Option<&Path>,
    out: &Path,
) -> Result<ReportSummary, CliError> {
    let (agents, mut warnings) = load_dir(traces)?;
    let humans = match human {
        Some(h) => {
            let (t, w) = load_dir(h)?;
            warnings.extend(w);
            t
        }
        None => Vec::new(),
    };
    let groups = group(agents, humans);
    let files = write_report(&groups, out)?;
    Ok(ReportSummary {
        groups: groups
            .iter()
            .map(|g| (g.label.clone(), g.raw.len()))
            .collect(),
        files,
        warnings,
    })
}
