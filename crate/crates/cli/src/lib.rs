//! The `arena` command line.
//!
//! Every subcommand writes JSON lines to stdout. Failures print one JSON object
//! (`{"error": code, "message": ...}`) to stderr and exit with 1, or with 2 for usage
//! errors.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use arena_core::games;
use arena_core::runner::{load_trace, verify_trace, Protocol, ReplayError};
use arena_core::vgdl::{validate_bundle, BundleSource};
use arena_server::{AppState, CreateSession, DiagnosticView, Owner, ServerConfig};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

mod error;
pub mod eval;
pub mod report;
pub mod settings;

pub use error::CliError;
pub use settings::{resolve, EvalFlags, EvalSettings};

#[derive(Debug, Parser)]
#[command(name = "arena", version, about = "Grid-world rule-discovery arena")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check game bundles and print diagnostics.
    Validate(ValidateArgs),
    /// Run agents through games and write traces.
    Eval(EvalArgs),
    /// Compute metric tables and curves from traces.
    Metrics(MetricsArgs),
    /// Serve the play and replay API.
    Serve(ServeArgs),
    /// Serve the API and open one play session.
    Play(PlayArgs),
    /// Re-simulate traces and check every stored digest.
    ReplayVerify(ReplayVerifyArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Bundle directory (game.vgdl plus level_N.txt). Repeatable.
    #[arg(long = "bundle")]
    pub bundles: Vec<PathBuf>,
    /// Bundled game name. Repeatable. With neither flag, all bundled games are checked.
    #[arg(long = "game")]
    pub games: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// TOML settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "bundle")]
    pub bundles: Vec<PathBuf>,
    #[arg(long = "game")]
    pub games: Vec<String>,
    /// `builtin:random`, `builtin:wait`, or a TOML/JSON agent file. Repeatable.
    #[arg(long = "agent")]
    pub agents: Vec<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// `blocked` or `fixed_window`.
    #[arg(long)]
    pub protocol: Option<Protocol>,
    /// Global step budget per session.
    #[arg(long)]
    pub budget: Option<u32>,
    /// Consecutive wins needed to advance.
    #[arg(long)]
    pub wins: Option<u32>,
    /// Step cap for a single episode.
    #[arg(long)]
    pub episode_cap: Option<u32>,
    /// Window length for `fixed_window`.
    #[arg(long)]
    pub window: Option<u32>,
    /// `0..5`, `0..=4` or `1,2,7`.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite existing traces instead of resuming them.
    #[arg(long)]
    pub fresh: bool,
    #[arg(long)]
    pub parallel: Option<usize>,
}

impl From<EvalArgs> for EvalFlags {
    fn from(a: EvalArgs) -> Self {
        EvalFlags {
            config: a.config,
            bundles: a.bundles,
            games: a.games,
            agents: a.agents,
            endpoint: a.endpoint,
            model: a.model,
            protocol: a.protocol,
            budget: a.budget,
            wins: a.wins,
            episode_cap: a.episode_cap,
            window: a.window,
            seeds: a.seeds,
            out: a.out,
            fresh: a.fresh,
            parallel: a.parallel,
        }
    }
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub human_traces: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory for replays and live session traces.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Seconds before an untouched session is dropped.
    #[arg(long, default_value_t = 1800)]
    pub idle_timeout: u64,
    /// Extra bundle directory. Repeatable; replaces a bundled game of the same name.
    #[arg(long = "bundle")]
    pub bundles: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    #[command(flatten)]
    pub serve: ServeArgs,
    #[arg(long)]
    pub game: String,
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReplayVerifyArgs {
    #[arg(required = true)]
    pub traces: Vec<PathBuf>,
}

fn emit(out: &mut dyn Write, v: &serde_json::Value) -> Result<(), CliError> {
    writeln!(out, "{v}")
        .and_then(|_| out.flush())
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::BrokenPipe => CliError::Closed,
            _ => CliError::failed("io_error", e),
        })
}

fn builtin(name: &str) -> Result<BundleSource, CliError> {
    games::source(name).ok_or_else(|| CliError::usage(format!("unknown game `{name}`")))
}

fn read_bundle(dir: &Path) -> Result<BundleSource, CliError> {
    BundleSource::load_dir(dir).map_err(|e| CliError::failed("io_error", e))
}

pub fn validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut sources = Vec::new();
    for g in &args.games {
        sources.push(builtin(g)?);
    }
    for d in &args.bundles {
        sources.push(read_bundle(d)?);
    }
    if sources.is_empty() {
        sources = games::all_sources();
    }
    let mut bad = Vec::new();
    for s in &sources {
        let diags: Vec<DiagnosticView> = validate_bundle(s)
            .iter()
            .map(DiagnosticView::from)
            .collect();
        if !diags.is_empty() {
            bad.push(s.name.clone());
        }
        emit(
            out,
            &json!({ "bundle": s.name, "levels": s.levels.len(), "ok": diags.is_empty(), "diagnostics": diags }),
        )?;
    }
    match bad.is_empty() {
        true => Ok(()),
        false => Err(CliError::failed(
            "invalid_bundle",
            format!("invalid: {}", bad.join(", ")),
        )),
    }
}

pub fn eval(args: EvalArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let settings = resolve(&args.into(), &|k| std::env::var(k).ok())?;
    let mut write_err = None;
    let reports = eval::run_eval(&settings, |r| {
        if let Err(e) = emit(out, &serde_json::to_value(r).expect("report serializes")) {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let failed = reports.iter().filter(|r| r.status == "failed").count();
    match failed {
        0 => Ok(()),
        n => Err(CliError::failed(
            "jobs_failed",
            format!("{n} of {} sessions failed", reports.len()),
        )),
    }
}

pub fn metrics(args: &MetricsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let summary = report::run_metrics(&args.traces, args.human_traces.as_deref(), &args.report)?;
    emit(
        out,
        &serde_json::to_value(summary).expect("summary serializes"),
    )
}

/// Outcome of re-simulating one trace file.
pub fn verify_file(path: &Path) -> Result<usize, CliError> {
    let (trace, damaged) = load_trace(path).map_err(|e| CliError::failed("corrupt_trace", e))?;
    if let Some(e) = damaged {
        return Err(CliError::failed("corrupt_trace", e));
    }
    verify_trace(&trace).map_err(|e| match e {
        ReplayError::DigestMismatch { .. } | ReplayError::OutcomeMismatch { .. } => {
            CliError::failed("digest_mismatch", e)
        }
        e => CliError::failed("replay_error", e),
    })?;
    Ok(trace.steps.len())
}

pub fn replay_verify(args: &ReplayVerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut first = None;
    for p in &args.traces {
        match verify_file(p) {
            Ok(steps) => emit(out, &json!({ "trace": p, "ok": true, "steps": steps }))?,
            Err(e) => {
                emit(
                    out,
                    &json!({ "trace": p, "ok": false, "error": e.code(), "message": e.to_string() }),
                )?;
                first.get_or_insert(e);
            }
        }
    }
    first.map_or(Ok(()), Err)
}

fn server_config(args: &ServeArgs) -> Result<ServerConfig, CliError> {
    let mut bundles = games::all_sources();
    for d in &args.bundles {
        let b = read_bundle(d)?;
        if let Some(e) = validate_bundle(&b).first() {
            return Err(CliError::failed(
                "invalid_bundle",
                format!("{}: {e}", b.name),
            ));
        }
        bundles.retain(|x| x.name != b.name);
        bundles.push(b);
    }
    if let Some(t) = &args.traces {
        std::fs::create_dir_all(t).map_err(|e| CliError::failed("io_error", e))?;
    }
    Ok(ServerConfig {
        trace_dir: args.traces.clone(),
        idle_timeout: Duration::from_secs(args.idle_timeout),
        bundles,
        ..ServerConfig::default()
    })
}

fn run_server(
    args: &ServeArgs,
    session: Option<CreateSession>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let state = AppState::new(server_config(args)?);
    let created = match &session {
        Some(req) => Some(
            state
                .create_session(req)
                .map_err(|e| CliError::failed("session", e.body().message))?,
        ),
        None => None,
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::failed("io_error", e))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| CliError::failed("bind", format!("{}:{}: {e}", args.host, args.port)))?;
        let addr: SocketAddr = listener.local_addr().map_err(|e| CliError::failed("bind", e))?;
        let base = format!("http://{addr}");
        emit(out, &json!({ "listening": base }))?;
        if let Some(c) = created {
            emit(
                out,
                &json!({ "session": c.id, "url": format!("{base}/sessions/{}", c.id), "live": format!("ws://{addr}/sessions/{}/live", c.id) }),
            )?;
        }
        arena_server::serve(listener, state).await.map_err(|e| CliError::failed("io_error", e))
    })
}

pub fn run(cli: Cli, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(a) => validate(&a, out),
        Command::Eval(a) => eval(a, out),
        Command::Metrics(a) => metrics(&a, out),
        Command::ReplayVerify(a) => replay_verify(&a, out),
        Command::Serve(a) => run_server(&a, None, out),
        Command::Play(a) => {
            let req = CreateSession {
                bundle: a.game.clone(),
                level: a.level,
                seed: a.seed,
                description: None,
                layout: None,
                owner: Owner::Human,
            };
            run_server(&a.serve, Some(req), out)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout();
    match run(cli, &mut stdout) {
        Ok(()) => 0,
        Err(CliError::Closed) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}
