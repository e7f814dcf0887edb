use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use arena_core::agent::{Agent, ScriptedAgent};
use arena_core::runner::{
    load_trace, trace_file_name, EndReason, RunConfig, RunError, SessionDriver, SessionTrace,
};
use arena_core::vgdl::BundleSource;
use arena_core::Action;
use arena_gateway::{ChatBackend, HttpBackend, Limits, LlmAgent};
use serde::Serialize;

use crate::settings::{AgentSpec, Builtin, EvalSettings};
use crate::CliError;

/// One line of `eval` output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JobReport {
    pub trace: PathBuf,
    pub agent: String,
    pub game: String,
    pub seed: u64,
    /// `ran`, `resumed`, `skipped` (already complete) or `failed`.
    pub status: &'static str,
    pub steps: u32,
    pub levels_mastered: usize,
    pub end: Option<EndReason>,
    pub error: Option<String>,
}

struct Job<'a> {
    spec: &'a AgentSpec,
    backend: Option<Arc<dyn ChatBackend>>,
    bundle: &'a BundleSource,
    seed: u64,
}

fn make_agent(job: &Job<'_>, limits: &Arc<Limits>) -> Box<dyn Agent> {
    match (job.spec, &job.backend) {
        (AgentSpec::Builtin(Builtin::Random), _) => {
            Box::new(ScriptedAgent::random(job.seed).with_id("random"))
        }
        (AgentSpec::Builtin(Builtin::Wait), _) => {
            Box::new(ScriptedAgent::constant(Action::Wait).with_id("wait"))
        }
        (AgentSpec::Llm(cfg), Some(b)) => {
            Box::new(LlmAgent::new((**cfg).clone(), b.clone(), limits.clone()))
        }
        (AgentSpec::Llm(_), None) => unreachable!("LLM jobs carry a backend"),
    }
}

fn mastered(trace: &SessionTrace) -> usize {
    trace.levels().iter().filter(|l| l.mastered).count()
}

fn run_job(
    job: &Job<'_>,
    run: &RunConfig,
    out: &Path,
    fresh: bool,
    limits: &Arc<Limits>,
) -> JobReport {
    let id = job.spec.id();
    let path = out.join(trace_file_name(&id, &job.bundle.name, job.seed));
    let mut report = JobReport {
        trace: path.clone(),
        agent: id,
        game: job.bundle.name.clone(),
        seed: job.seed,
        status: "ran",
        steps: 0,
        levels_mastered: 0,
        end: None,
        error: None,
    };
    let mut agent = make_agent(job, limits);
    let run = RunConfig {
        seed: job.seed,
        ..run.clone()
    };
    let result = if path.exists() && !fresh {
        resume(&path, run, agent.as_mut(), &mut report)
    } else {
        SessionDriver::new(job.bundle, run, agent.descriptor())
            .and_then(|mut d| d.write_to(&path).map(|_| d))
            .and_then(|d| d.run(agent.as_mut()))
    };
    match result {
        Ok(trace) => {
            report.steps = trace.total_steps();
            report.levels_mastered = mastered(&trace);
            report.end = trace.end.as_ref().map(|e| e.reason);
        }
        Err(RunError::AgentAborted { error, trace }) => {
            report.status = "failed";
            report.steps = trace.total_steps();
            report.levels_mastered = mastered(&trace);
            report.end = Some(EndReason::Aborted);
            report.error = Some(error.to_string());
        }
        Err(e) => {
            report.status = "failed";
            report.error = Some(e.to_string());
        }
    }
    report
}

fn resume(
    path: &Path,
    run: RunConfig,
    agent: &mut dyn Agent,
    report: &mut JobReport,
) -> Result<SessionTrace, RunError> {
    let (trace, _damaged_tail) = load_trace(path)?;
    let same_agent = trace.header.agent == agent.descriptor();
    if trace.header.run != run || !same_agent {
        return Err(RunError::ResumeMismatch(format!(
            "{} was written with different settings; rerun with --fresh",
            path.display()
        )));
    }
    if trace
        .end
        .as_ref()
        .is_some_and(|e| e.reason != EndReason::Aborted)
    {
        report.status = "skipped";
        return Ok(trace);
    }
    report.status = "resumed";
    SessionDriver::resume(trace, agent, Some(path))?.run(agent)
}

/// Runs every (agent, game, seed) session, `parallel` at a time, and reports each one.
pub fn run_eval(
    settings: &EvalSettings,
    mut emit: impl FnMut(&JobReport) + Send,
) -> Result<Vec<JobReport>, CliError> {
    std::fs::create_dir_all(&settings.out)
        .map_err(|e| CliError::failed("io_error", format!("{}: {e}", settings.out.display())))?;
    let limits = Limits::new(settings.parallel);
    let backends: Vec<Option<Arc<dyn ChatBackend>>> = settings
        .agents
        .iter()
        .map(|a| match a {
            AgentSpec::Llm(cfg) => Some(Arc::new(HttpBackend::new(cfg)) as Arc<dyn ChatBackend>),
            AgentSpec::Builtin(_) => None,
        })
        .collect();
    let mut jobs = VecDeque::new();
    for (spec, backend) in settings.agents.iter().zip(&backends) {
        for bundle in &settings.bundles {
            for &seed in &settings.seeds {
                jobs.push_back(Job {
                    spec,
                    backend: backend.clone(),
                    bundle,
                    seed,
                });
            }
        }
    }
    let total = jobs.len();
    let queue = Mutex::new(jobs);
    let done = Mutex::new(Vec::with_capacity(total));
    let emit = Mutex::new(&mut emit);
    std::thread::scope(|s| {
        for _ in 0..settings.parallel.min(total.max(1)) {
            s.spawn(|| loop {
                let Some(job) = queue.lock().expect("queue poisoned").pop_front() else {
                    break;
                };
                let r = run_job(&job, &settings.run, &settings.out, settings.fresh, &limits);
                (emit.lock().expect("emit poisoned"))(&r);
                done.lock().expect("results poisoned").push(r);
            });
        }
    });
    let mut reports = done.into_inner().expect("results poisoned");
    reports.sort_by(|a, b| (&a.agent, &a.game, a.seed).cmp(&(&b.agent, &b.game, b.seed)));
    Ok(reports)
}
