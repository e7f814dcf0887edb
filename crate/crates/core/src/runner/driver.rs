use std::hash::Hasher;
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use fnv::FnvHasher;

use crate::agent::{Agent, AgentDescriptor, AgentError, AgentReply, SessionContext};
use crate::engine::{init_episode, EpisodeStatus, Game, WorldState};
use crate::obs::{render_observation, ColorMap, LastTrial, TrialOutcome, PROMPT_VERSION};
use crate::vgdl::BundleSource;

use super::trace::{prefix_len, TraceWriter};
use super::{
    EndReason, Protocol, RunConfig, RunError, SessionTrace, StepRecord, StepStatus, TraceEnd,
    TraceHeader, TraceLine, SCHEMA_VERSION,
};

/// Seed of the `ordinal`-th episode of a session.
pub fn episode_seed(session_seed: u64, ordinal: u32) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&session_seed.to_le_bytes());
    h.write(&ordinal.to_le_bytes());
    h.finish()
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Push-style session state machine: read [`observation`](Self::observation), feed back an
/// [`AgentReply`] with [`apply`](Self::apply), repeat until [`is_finished`](Self::is_finished).
/// Every step is appended to the trace (and to its file, when one is attached).
pub struct SessionDriver {
    game: Arc<Game>,
    trace: SessionTrace,
    writer: Option<TraceWriter>,
    state: WorldState,
    level: usize,
    episode: u32,
    ordinal: u32,
    streak: u32,
    window_used: u32,
    last_trial: Option<LastTrial>,
    ended: Option<WorldState>,
    started: bool,
}

impl SessionDriver {
    pub fn new(
        source: &BundleSource,
        run: RunConfig,
        agent: AgentDescriptor,
    ) -> Result<Self, RunError> {
        run.validate()?;
        let game = Game::new(source.compile()?)?;
        let color_map =
            ColorMap::assign(&game.bundle.description, run.color_seed.unwrap_or(run.seed))?;
        let header = TraceHeader {
            schema_version: SCHEMA_VERSION,
            game: source.name.clone(),
            agent,
            run,
            color_map,
            prompt_version: PROMPT_VERSION.to_string(),
            bundle: source.clone(),
            started_at_ms: now_ms(),
            censoring: None,
        };
        let start = header.run.start_level;
        let state = init_episode(&game, start, episode_seed(header.run.seed, 0))?;
        Ok(SessionDriver {
            game,
            trace: SessionTrace {
                header,
                steps: Vec::new(),
                end: None,
            },
            writer: None,
            started: false,
            state,
            level: start,
            episode: 0,
            ordinal: 0,
            streak: 0,
            window_used: 0,
            last_trial: None,
            ended: None,
        })
    }

    /// Starts writing the trace to `path` (header plus any steps so far).
    pub fn write_to(&mut self, path: impl AsRef<Path>) -> Result<(), RunError> {
        let mut w = TraceWriter::create(path)?;
        for line in self.trace.lines() {
            w.append(&line)?;
        }
        self.writer = Some(w);
        Ok(())
    }

    /// Rebuilds a session from a trace by replaying its steps, checking every
    /// observation and digest, and hands each recorded exchange to `agent`. With `path`,
    /// further steps are appended to that file after its valid prefix.
    pub fn resume(
        trace: SessionTrace,
        agent: &mut dyn Agent,
        path: Option<&Path>,
    ) -> Result<Self, RunError> {
        let h = &trace.header;
        let mut d = SessionDriver::new(&h.bundle, h.run.clone(), h.agent.clone())?;
        d.trace.header = h.clone();
        if let Err(error) = d.start(agent) {
            return Err(d.aborted(error));
        }
        for (i, rec) in trace.steps.iter().enumerate() {
            let obs = d.observation();
            if obs != rec.observation || d.state.state_hash() != rec.pre_digest {
                return Err(RunError::ResumeMismatch(format!(
                    "step record {i} diverges"
                )));
            }
            let reply = AgentReply {
                action: rec.action,
                rationale: rec.rationale.clone(),
                raw: rec.raw.clone(),
                latency: std::time::Duration::from_millis(rec.latency_ms),
                reasoning_chars: rec.reasoning_chars,
            };
            let got = d.apply(&reply)?.clone();
            if got.digest != rec.digest || got.status != rec.status {
                return Err(RunError::ResumeMismatch(format!(
                    "step record {i} diverges"
                )));
            }
            agent.restore(&obs, &reply);
        }
        match &trace.end {
            Some(end) if end.reason != EndReason::Aborted => {
                if d.trace.end.is_none() {
                    return Err(RunError::ResumeMismatch(
                        "recorded end not reproduced".into(),
                    ));
                }
                d.trace.end = Some(end.clone());
            }
            _ => {}
        }
        if let Some(p) = path {
            let lines = 1 + d.trace.steps.len() + usize::from(d.trace.end.is_some());
            d.writer = Some(TraceWriter::append_to(
                p,
                prefix_len(p, lines).map_err(super::TraceError::from)?,
            )?);
        }
        Ok(d)
    }

    pub fn game(&self) -> &Arc<Game> {
        &self.game
    }

    pub fn header(&self) -> &TraceHeader {
        &self.trace.header
    }

    pub fn trace(&self) -> &SessionTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SessionTrace {
        self.trace
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn is_finished(&self) -> bool {
        self.trace.end.is_some()
    }

    pub fn last_trial(&self) -> Option<&LastTrial> {
        self.last_trial.as_ref()
    }

    /// Final state of the episode that the last [`apply`](Self::apply) ended, if any.
    pub fn ended_episode(&self) -> Option<&WorldState> {
        self.ended.as_ref()
    }

    pub fn observation(&self) -> String {
        render_observation(
            &self.state,
            &self.trace.header.color_map,
            self.last_trial.as_ref(),
        )
    }

    /// Plays one step with the agent's reply and advances the curriculum.
    pub fn apply(&mut self, reply: &AgentReply) -> Result<&StepRecord, RunError> {
        if self.is_finished() {
            return Err(RunError::Finished);
        }
        let run = self.trace.header.run.clone();
        self.ended = None;
        let observation = self.observation();
        let pre_digest = self.state.state_hash();
        let step = self.state.step_index();
        self.state.step(reply.action)?;
        let cum_step = self.trace.total_steps() + 1;
        self.window_used += 1;

        let status = match self.state.status() {
            EpisodeStatus::Won => StepStatus::Won,
            EpisodeStatus::Lost => StepStatus::Lost,
            EpisodeStatus::Ongoing => {
                let capped = run
                    .episode_step_cap
                    .is_some_and(|c| self.state.step_index() >= c);
                let window_over =
                    run.protocol == Protocol::FixedWindow && self.window_used >= run.window_steps;
                if capped || window_over || cum_step >= run.global_step_budget {
                    StepStatus::Truncated
                } else {
                    StepStatus::Ongoing
                }
            }
        };
        let record = StepRecord {
            level: self.level,
            episode: self.episode,
            ordinal: self.ordinal,
            step,
            cum_step,
            observation,
            action: reply.action,
            rationale: reply.rationale.clone(),
            reasoning_chars: reply.reasoning_chars,
            raw: reply.raw.clone(),
            latency_ms: reply.latency.as_millis() as u64,
            score: self.state.score(),
            status,
            pre_digest,
            digest: self.state.state_hash(),
        };
        self.write(&TraceLine::Step(record.clone()))?;
        self.trace.steps.push(record);

        if let Some(outcome) = status.outcome() {
            self.ended = Some(self.state.clone());
            self.last_trial = Some(LastTrial {
                outcome,
                score: self.state.score(),
            });
            self.streak = if outcome == TrialOutcome::Won {
                self.streak + 1
            } else {
                0
            };
            let advance = match run.protocol {
                Protocol::Blocked => self.streak >= run.consecutive_wins_to_advance,
                Protocol::FixedWindow => self.window_used >= run.window_steps,
                Protocol::FreePlay => false,
            };
            if advance {
                self.level += 1;
                self.episode = 0;
                self.streak = 0;
                self.window_used = 0;
            } else {
                self.episode += 1;
            }
            self.ordinal += 1;
            if self.level >= self.game.bundle.levels.len() {
                self.finish(EndReason::AllLevelsDone, None)?;
            } else if cum_step >= run.global_step_budget {
                self.finish(EndReason::BudgetExhausted, None)?;
            } else {
                self.state =
                    init_episode(&self.game, self.level, episode_seed(run.seed, self.ordinal))?;
            }
        }
        Ok(self.trace.steps.last().expect("just pushed"))
    }

    /// Ends the session because the agent failed.
    pub fn abort(&mut self, error: &AgentError) -> Result<(), RunError> {
        if self.is_finished() {
            return Ok(());
        }
        self.finish(EndReason::Aborted, Some(error.to_string()))
    }

    fn finish(&mut self, reason: EndReason, error: Option<String>) -> Result<(), RunError> {
        let end = TraceEnd {
            reason,
            total_steps: self.trace.total_steps(),
            error,
            finished_at_ms: now_ms(),
        };
        self.write(&TraceLine::End(end.clone()))?;
        self.trace.end = Some(end);
        Ok(())
    }

    fn write(&mut self, line: &TraceLine) -> Result<(), RunError> {
        if let Some(w) = &mut self.writer {
            w.append(line)?;
        }
        Ok(())
    }

    /// Plays the session to the end with `agent`. Agent failures abort the session: an
    /// end line recording the error is written and [`RunError::AgentAborted`] carries the
    /// trace so far.
    pub fn run(mut self, agent: &mut dyn Agent) -> Result<SessionTrace, RunError> {
        if let Err(error) = self.start(agent) {
            return Err(self.aborted(error));
        }
        while !self.is_finished() {
            let obs = self.observation();
            match agent.act(&obs) {
                Ok(reply) => {
                    self.apply(&reply)?;
                }
                Err(error) => return Err(self.aborted(error)),
            }
        }
        Ok(self.trace)
    }

    /// Calls `begin_session` once per driver.
    fn start(&mut self, agent: &mut dyn Agent) -> Result<(), AgentError> {
        if self.started {
            return Ok(());
        }
        self.started = true;
        agent.begin_session(&SessionContext {
            game: &self.trace.header.game,
            description: &self.game.bundle.description,
            color_map: &self.trace.header.color_map,
        })
    }

    fn aborted(mut self, error: AgentError) -> RunError {
        if let Err(e) = self.abort(&error) {
            return e;
        }
        RunError::AgentAborted {
            error,
            trace: Box::new(self.trace),
        }
    }
}

/// Runs a full session from scratch, optionally writing the trace to `out`.
pub fn run_session(
    source: &BundleSource,
    run: RunConfig,
    agent: &mut dyn Agent,
    out: Option<&Path>,
) -> Result<SessionTrace, RunError> {
    let mut d = SessionDriver::new(source, run, agent.descriptor())?;
    if let Some(p) = out {
        d.write_to(p)?;
    }
    d.run(agent)
}
