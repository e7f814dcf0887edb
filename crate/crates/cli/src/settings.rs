//! Evaluation settings, layered as flags > config file > environment > defaults.
//!
//! Config file (TOML):
//!
//! ```toml
//! out = "runs"
//! seeds = "0..5"
//! parallel = 4
//! games = ["bait", "zelda"]          # bundled games
//! bundles = ["my-games/maze"]        # bundle directories, relative to this file
//!
//! [run]                              # curriculum settings
//! protocol = "blocked"
//! consecutive_wins_to_advance = 2
//! global_step_budget = 1600
//!
//! [[agents]]                         # one table per agent; the sweep is agents x games x seeds
//! model = "my-model"
//! endpoint = "http://localhost:8000/v1"
//! rationale_mode = "copied_reasoning"
//!
//! [[agents]]
//! builtin = "random"
//! ```

use std::path::{Path, PathBuf};

use arena_core::games;
use arena_core::runner::{Protocol, RunConfig};
use arena_core::vgdl::BundleSource;
use arena_gateway::AgentConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Environment variables consulted for agent endpoints. The API key variable is named
/// by each agent's `api_key_env` (default `ARENA_API_KEY`).
pub const ENV_ENDPOINT: &str = "ARENA_ENDPOINT";
pub const ENV_MODEL: &str = "ARENA_MODEL";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub seeds: Option<String>,
    pub parallel: Option<usize>,
    pub fresh: Option<bool>,
    #[serde(default)]
    pub games: Vec<String>,
    #[serde(default)]
    pub bundles: Vec<PathBuf>,
    #[serde(default)]
    pub run: Map<String, Value>,
    #[serde(default)]
    pub agents: Vec<Map<String, Value>>,
    /// Directory of the file, for relative bundle paths.
    #[serde(skip)]
    pub base: PathBuf,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }
}

/// Command-line values for `eval`; `None` means not given.
#[derive(Debug, Clone, Default)]
pub struct EvalFlags {
    pub config: Option<PathBuf>,
    pub bundles: Vec<PathBuf>,
    pub games: Vec<String>,
    pub agents: Vec<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub protocol: Option<Protocol>,
    pub budget: Option<u32>,
    pub wins: Option<u32>,
    pub episode_cap: Option<u32>,
    pub window: Option<u32>,
    pub seeds: Option<String>,
    pub out: Option<PathBuf>,
    pub fresh: bool,
    pub parallel: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    /// Uniformly random actions, seeded by the session seed.
    Random,
    /// Always waits.
    Wait,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentSpec {
    Builtin(Builtin),
    Llm(Box<AgentConfig>),
}

impl AgentSpec {
    pub fn id(&self) -> String {
        match self {
            AgentSpec::Builtin(Builtin::Random) => "random".into(),
            AgentSpec::Builtin(Builtin::Wait) => "wait".into(),
            AgentSpec::Llm(c) => c.id(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub bundles: Vec<BundleSource>,
    pub agents: Vec<AgentSpec>,
    pub run: RunConfig,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub fresh: bool,
    pub parallel: usize,
}

/// Parses `a..b` (exclusive), `a..=b` or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::usage(format!("invalid seed list `{s}`"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// Overwrites keys of `base` with those of `over`, recursing into nested tables.
fn merge(base: &mut Value, over: &Map<String, Value>) {
    let Value::Object(target) = base else { return };
    for (k, v) in over {
        match (target.get_mut(k), v) {
            (Some(t @ Value::Object(_)), Value::Object(o)) => merge(t, o),
            _ => {
                target.insert(k.clone(), v.clone());
            }
        }
    }
}

fn agent_spec(
    table: &Map<String, Value>,
    flags: &EvalFlags,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<AgentSpec, CliError> {
    if let Some(b) = table.get("builtin") {
        if table.len() > 1 {
            return Err(CliError::usage("a builtin agent takes no other settings"));
        }
        let b: Builtin = serde_json::from_value(b.clone())
            .map_err(|_| CliError::usage(format!("unknown builtin agent {b}")))?;
        return Ok(AgentSpec::Builtin(b));
    }
    let mut v = serde_json::to_value(AgentConfig::default()).expect("config serializes");
    let mut from_env = Map::new();
    for (var, key) in [(ENV_ENDPOINT, "endpoint"), (ENV_MODEL, "model")] {
        if let Some(val) = env(var) {
            from_env.insert(key.into(), Value::String(val));
        }
    }
    merge(&mut v, &from_env);
    merge(&mut v, table);
    let mut from_flags = Map::new();
    if let Some(e) = &flags.endpoint {
        from_flags.insert("endpoint".into(), Value::String(e.clone()));
    }
    if let Some(m) = &flags.model {
        from_flags.insert("model".into(), Value::String(m.clone()));
    }
    merge(&mut v, &from_flags);
    let cfg: AgentConfig =
        serde_json::from_value(v).map_err(|e| CliError::usage(format!("agent config: {e}")))?;
    cfg.validate()
        .map_err(|e| CliError::usage(format!("agent config: {e}")))?;
    Ok(AgentSpec::Llm(Box::new(cfg)))
}

/// Reads an `--agent` value: `builtin:<name>` or a TOML/JSON agent file.
fn agent_flag(value: &str) -> Result<Map<String, Value>, CliError> {
    if let Some(name) = value.strip_prefix("builtin:") {
        let mut m = Map::new();
        m.insert("builtin".into(), Value::String(name.into()));
        return Ok(m);
    }
    let text = std::fs::read_to_string(value)
        .map_err(|e| CliError::usage(format!("reading agent {value}: {e}")))?;
    let parsed: Result<Map<String, Value>, String> = if value.ends_with(".json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::usage(format!("agent {value}: {e}")))
}

fn load_bundle(dir: &Path) -> Result<BundleSource, CliError> {
    BundleSource::load_dir(dir).map_err(|e| CliError::failed("bundle", e))
}

/// Builds the effective settings. `env` looks up environment variables.
pub fn resolve(
    flags: &EvalFlags,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<EvalSettings, CliError> {
    let file = match &flags.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };

    let tables: Vec<Map<String, Value>> = if flags.agents.is_empty() {
        file.agents.clone()
    } else {
        flags
            .agents
            .iter()
            .map(|a| agent_flag(a))
            .collect::<Result<_, _>>()?
    };
    if tables.is_empty() {
        return Err(CliError::usage(
            "no agent given (use --agent or [[agents]] in --config)",
        ));
    }
    let agents = tables
        .iter()
        .map(|t| agent_spec(t, flags, env))
        .collect::<Result<Vec<_>, _>>()?;

    let mut run = serde_json::to_value(RunConfig::default()).expect("run config serializes");
    merge(&mut run, &file.run);
    let mut over = Map::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            over.insert(k.into(), v);
        }
    };
    put(
        "protocol",
        flags.protocol.map(|p| serde_json::to_value(p).unwrap()),
    );
    put("global_step_budget", flags.budget.map(Value::from));
    put("consecutive_wins_to_advance", flags.wins.map(Value::from));
    put("episode_step_cap", flags.episode_cap.map(Value::from));
    put("window_steps", flags.window.map(Value::from));
    merge(&mut run, &over);
    let run: RunConfig =
        serde_json::from_value(run).map_err(|e| CliError::usage(format!("run config: {e}")))?;
    run.validate().map_err(CliError::usage)?;
    if run.protocol == Protocol::FreePlay {
        return Err(CliError::usage(
            "free_play is for interactive sessions, not evaluations",
        ));
    }

    let (games, dirs) = if flags.games.is_empty() && flags.bundles.is_empty() {
        (
            file.games.clone(),
            file.bundles.iter().map(|b| file.base.join(b)).collect(),
        )
    } else {
        (flags.games.clone(), flags.bundles.clone())
    };
    let mut bundles = Vec::new();
    for g in &games {
        bundles.push(
            games::source(g)
                .ok_or_else(|| CliError::usage(format!("no bundled game named `{g}`")))?,
        );
    }
    for d in &dirs {
        bundles.push(load_bundle(d)?);
    }
    if bundles.is_empty() {
        bundles = games::all_sources();
    }

    let seeds = match flags.seeds.as_deref().or(file.seeds.as_deref()) {
        Some(s) => parse_seeds(s)?,
        None => vec![0],
    };
    let out = flags
        .out
        .clone()
        .or(file.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let parallel = flags.parallel.or(file.parallel).unwrap_or(1);
    if parallel == 0 {
        return Err(CliError::usage("--parallel must be at least 1"));
    }
    Ok(EvalSettings {
        bundles,
        agents,
        run,
        seeds,
        out,
        fresh: flags.fresh || file.fresh.unwrap_or(false),
        parallel,
    })
}
