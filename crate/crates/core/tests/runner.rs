mod common;

use std::time::Duration;

use arena_core::agent::{Agent, AgentDescriptor, AgentError, AgentReply, ScriptedAgent};
use arena_core::engine::StateDigest;
use arena_core::games;
use arena_core::obs::TrialOutcome;
use arena_core::runner::*;
use arena_core::Action;

fn cfg() -> RunConfig {
    RunConfig::default()
}

#[test]
fn always_winning_agent_masters_everything_at_step_180() {
    let mut agent = ScriptedAgent::constant(Action::Right);
    let trace = run_session(&common::corridor(), cfg(), &mut agent, None).unwrap();
    assert_eq!(trace.total_steps(), 180);
    assert_eq!(trace.episodes().len(), 18);
    assert_eq!(trace.end.as_ref().unwrap().reason, EndReason::AllLevelsDone);
    let levels = trace.levels();
    assert_eq!(levels.len(), 9);
    for l in &levels {
        assert!(l.mastered);
        assert_eq!(l.discovery_steps, Some(10));
        assert_eq!(l.execution_steps, vec![10]);
    }
    verify_trace(&trace).unwrap();
}

#[test]
fn never_winning_agent_exhausts_the_budget() {
    let mut agent = ScriptedAgent::constant(Action::Wait);
    let run = RunConfig {
        episode_step_cap: Some(50),
        ..cfg()
    };
    let trace = run_session(&common::corridor(), run, &mut agent, None).unwrap();
    assert_eq!(trace.total_steps(), 1600);
    let eps = trace.episodes();
    assert_eq!(eps.len(), 32);
    assert!(eps
        .iter()
        .all(|e| e.outcome == TrialOutcome::Truncated && e.level == 0));
    assert_eq!(
        trace.end.as_ref().unwrap().reason,
        EndReason::BudgetExhausted
    );
    let levels = trace.levels();
    assert_eq!(levels.len(), 1);
    assert_eq!(levels[0].discovery_steps, None);
    assert!(!levels[0].mastered);
}

#[test]
fn fixed_windows_advance_unconditionally() {
    for action in [Action::Wait, Action::Right] {
        let run = RunConfig {
            protocol: Protocol::FixedWindow,
            ..cfg()
        };
        let trace = run_session(
            &common::corridor(),
            run,
            &mut ScriptedAgent::constant(action),
            None,
        )
        .unwrap();
        assert_eq!(trace.total_steps(), 540);
        for (i, l) in trace.levels().iter().enumerate() {
            assert_eq!(l.level, i);
            assert_eq!(l.episodes.iter().map(|e| e.steps).sum::<u32>(), 60);
        }
    }
}

#[test]
fn last_trial_is_reported_on_the_next_episode() {
    let mut agent = ScriptedAgent::constant(Action::Right);
    let trace = run_session(&common::corridor(), cfg(), &mut agent, None).unwrap();
    assert!(!trace.steps[0].observation.contains("LAST TRIAL"));
    assert!(trace.steps[10]
        .observation
        .contains("LAST TRIAL: won (score 1)"));
    assert_eq!(trace.steps[10].step, 0);
    assert!(!trace.steps[11].observation.contains("LAST TRIAL"));
}

struct Flaky {
    fail_at: usize,
    calls: usize,
}

impl Agent for Flaky {
    fn descriptor(&self) -> AgentDescriptor {
        AgentDescriptor {
            id: "flaky".into(),
            config: serde_json::json!({}),
        }
    }
    fn act(&mut self, _: &str) -> Result<AgentReply, AgentError> {
        self.calls += 1;
        if self.calls > self.fail_at {
            return Err(AgentError::UnparseableReply {
                attempts: 3,
                reason: "no JSON object".into(),
            });
        }
        Ok(AgentReply::new(
            Action::Right,
            Some("east".into()),
            Some("{}".into()),
            Duration::from_millis(3),
        ))
    }
}

#[test]
fn agent_failure_aborts_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.trace.jsonl");
    let mut agent = Flaky {
        fail_at: 5,
        calls: 0,
    };
    let err = run_session(&common::corridor(), cfg(), &mut agent, Some(&path)).unwrap_err();
    let RunError::AgentAborted { error, trace } = err else {
        panic!("expected abort")
    };
    assert!(matches!(
        error,
        AgentError::UnparseableReply { attempts: 3, .. }
    ));
    assert_eq!(trace.steps.len(), 5);
    let (loaded, problem) = load_trace(&path).unwrap();
    assert!(problem.is_none());
    assert_eq!(loaded, *trace);
    let end = loaded.end.unwrap();
    assert_eq!(end.reason, EndReason::Aborted);
    assert!(end.error.unwrap().contains("unparseable"));
    assert_eq!(loaded.steps[4].reasoning_chars, 4);
    assert_eq!(loaded.steps[4].latency_ms, 3);
}

#[test]
fn persisted_traces_round_trip_and_survive_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir
        .path()
        .join(trace_file_name("scripted/random", "zelda", 3));
    assert!(path.ends_with("scripted-random__zelda__seed3.trace.jsonl"));
    let run = RunConfig {
        global_step_budget: 10_000,
        seed: 3,
        ..cfg()
    };
    let trace = run_session(
        &games::source("zelda").unwrap(),
        run,
        &mut ScriptedAgent::random(1),
        Some(&path),
    )
    .unwrap();
    assert_eq!(trace.total_steps(), 10_000);
    let (loaded, problem) = load_trace(&path).unwrap();
    assert!(problem.is_none());
    assert_eq!(loaded, trace);
    verify_trace(&loaded).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    let cut = text.len() - 40;
    std::fs::write(&path, &text[..cut]).unwrap();
    let (prefix, problem) = load_trace(&path).unwrap();
    let lines = text[..cut].lines().count();
    assert!(matches!(problem, Some(TraceError::CorruptTrace { line, .. }) if line == lines));
    assert_eq!(prefix.steps.len(), lines - 2);
    assert_eq!(prefix.steps[..], trace.steps[..lines - 2]);
}

#[test]
fn interrupted_sessions_resume_to_the_same_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.trace.jsonl");
    let src = games::source("chase").unwrap();
    let run = RunConfig {
        global_step_budget: 400,
        seed: 9,
        ..cfg()
    };
    let full = run_session(&src, run.clone(), &mut ScriptedAgent::random(2), None).unwrap();

    let mut agent = ScriptedAgent::random(2);
    let mut d = SessionDriver::new(&src, run, agent.descriptor()).unwrap();
    d.write_to(&path).unwrap();
    for _ in 0..150 {
        let obs = d.observation();
        let reply = agent.act(&obs).unwrap();
        d.apply(&reply).unwrap();
    }
    drop(d);
    // Simulate a crash mid-line.
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("{\"kind\":\"step\",\"lev");
    std::fs::write(&path, text).unwrap();

    let (partial, problem) = load_trace(&path).unwrap();
    assert!(problem.is_some());
    let mut agent = ScriptedAgent::random(2);
    let d = SessionDriver::resume(partial, &mut agent, Some(&path)).unwrap();
    let resumed = d.run(&mut agent).unwrap();
    assert_eq!(resumed.steps, full.steps);
    let (reloaded, problem) = load_trace(&path).unwrap();
    assert!(problem.is_none());
    assert_eq!(reloaded.steps, full.steps);
}

#[test]
fn frames_replay_with_digest_checks() {
    let run = RunConfig {
        global_step_budget: 300,
        seed: 4,
        ..cfg()
    };
    let trace = run_session(
        &games::source("lemmings").unwrap(),
        run,
        &mut ScriptedAgent::random(5),
        None,
    )
    .unwrap();
    for k in [0, 1, 57, 200, 299] {
        assert_eq!(
            frame_at(&trace, k).unwrap().state_hash(),
            trace.steps[k].pre_digest
        );
    }
    assert_eq!(
        frame_at(&trace, 300).unwrap().state_hash(),
        trace.steps[299].digest
    );
    assert!(matches!(
        frame_at(&trace, 301),
        Err(ReplayError::StepOutOfRange {
            index: 301,
            len: 300
        })
    ));

    let mut bad = trace.clone();
    bad.steps[120].digest = StateDigest(bad.steps[120].digest.0 ^ 1);
    assert!(matches!(
        verify_trace(&bad),
        Err(ReplayError::DigestMismatch { index: 120, .. })
    ));
}

#[test]
fn invalid_configs_are_rejected() {
    let run = RunConfig {
        global_step_budget: 0,
        ..cfg()
    };
    assert!(matches!(
        run_session(
            &common::corridor(),
            run,
            &mut ScriptedAgent::constant(Action::Wait),
            None
        ),
        Err(RunError::InvalidConfig(_))
    ));
}
