use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, Instant};

use arena_core::agent::{AgentDescriptor, AgentReply};
use arena_core::engine::EngineError;
use arena_core::runner::{
    trace_file_name, Protocol, RunConfig, RunError, SessionDriver, StepStatus,
};
use arena_core::vgdl::{validate_bundle, BundleError, BundleSource};
use arena_core::Action;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::error::{ApiError, DiagnosticView};
use crate::frame::FrameView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    #[default]
    Human,
    Agent,
}

impl Owner {
    fn token(self) -> &'static str {
        match self {
            Owner::Human => "human",
            Owner::Agent => "agent",
        }
    }
}

/// `POST /sessions` body. `description` replaces the game text and `layout` replaces the
/// chosen level, for this session only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    pub bundle: String,
    #[serde(default)]
    pub level: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub layout: Option<String>,
    #[serde(default)]
    pub owner: Owner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub frame: FrameView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub game: String,
    pub level: usize,
    pub seed: u64,
    pub owner: Owner,
    pub steps: u32,
    pub frame: FrameView,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRequest {
    pub action: Action,
}

/// Result of one action. `frame` shows the state right after the step, terminal or not;
/// when the episode ended, `reset` is the first frame of the restarted level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionResponse {
    pub frame: FrameView,
    pub status: StepStatus,
    pub reset: Option<FrameView>,
    /// True once the session's step budget is spent; further actions are refused.
    pub finished: bool,
}

/// One interactive session: a free-play curriculum driver pinned to a single level.
pub struct PlaySession {
    pub id: String,
    pub owner: Owner,
    pub created: Instant,
    pub last_active: Instant,
    driver: SessionDriver,
}

impl PlaySession {
    pub fn driver(&self) -> &SessionDriver {
        &self.driver
    }

    pub fn frame(&self) -> FrameView {
        FrameView::new(self.driver.state(), &self.driver.header().color_map)
    }

    pub fn info(&self) -> SessionInfo {
        let h = self.driver.header();
        SessionInfo {
            id: self.id.clone(),
            game: h.game.clone(),
            level: self.driver.level(),
            seed: h.run.seed,
            owner: self.owner,
            steps: self.driver.trace().total_steps(),
            frame: self.frame(),
        }
    }

    pub fn act(&mut self, action: Action) -> Result<ActionResponse, ApiError> {
        self.last_active = Instant::now();
        let status = match self.driver.apply(&AgentReply::bare(action)) {
            Ok(rec) => rec.status,
            Err(RunError::Finished) => return Err(ApiError::SessionFinished),
            Err(e) => return Err(ApiError::Internal(e.to_string())),
        };
        let cmap = &self.driver.header().color_map;
        let ended = self.driver.ended_episode();
        let frame = FrameView::new(ended.unwrap_or(self.driver.state()), cmap);
        let finished = self.driver.is_finished();
        let reset = (ended.is_some() && !finished).then(|| self.frame());
        Ok(ActionResponse {
            frame,
            status,
            reset,
            finished,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Replays are read from here and live sessions write their traces here.
    pub trace_dir: Option<PathBuf>,
    pub idle_timeout: Duration,
    /// Step budget of one play session.
    pub play_budget: u32,
    pub bundles: Vec<BundleSource>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            trace_dir: None,
            idle_timeout: Duration::from_secs(30 * 60),
            play_budget: 100_000,
            bundles: arena_core::games::all_sources(),
        }
    }
}

pub type SessionHandle = Arc<Mutex<PlaySession>>;

/// Shared server state. Each session sits behind its own fair async mutex, so commands
/// to one session run one at a time in arrival order.
pub struct AppState {
    pub config: ServerConfig,
    sessions: StdMutex<HashMap<String, SessionHandle>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Arc<AppState> {
        Arc::new(AppState {
            config,
            sessions: StdMutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn bundle(&self, name: &str) -> Option<&BundleSource> {
        self.config.bundles.iter().find(|b| b.name == name)
    }

    pub fn create_session(&self, req: &CreateSession) -> Result<SessionCreated, ApiError> {
        let base = self
            .bundle(&req.bundle)
            .ok_or_else(|| ApiError::UnknownBundle(req.bundle.clone()))?;
        if req.level >= base.levels.len() {
            return Err(ApiError::BadRequest(format!(
                "level {} out of range (bundle has {} levels)",
                req.level,
                base.levels.len()
            )));
        }
        let mut source = base.clone();
        if let Some(d) = &req.description {
            source.description = d.clone();
        }
        if let Some(l) = &req.layout {
            source.levels[req.level] = l.clone();
        }
        let diags = validate_bundle(&source);
        if !diags.is_empty() {
            return Err(ApiError::Parse(
                diags.iter().map(DiagnosticView::from).collect(),
            ));
        }

        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let run = RunConfig {
            protocol: Protocol::FreePlay,
            global_step_budget: self.config.play_budget,
            seed: req.seed,
            start_level: req.level,
            ..RunConfig::default()
        };
        let agent = AgentDescriptor {
            id: req.owner.token().to_string(),
            config: serde_json::json!({
                "session": id,
                "edited": req.description.is_some() || req.layout.is_some(),
            }),
        };
        let mut driver = SessionDriver::new(&source, run, agent).map_err(session_error)?;
        if let Some(dir) = &self.config.trace_dir {
            let name = trace_file_name(
                &format!("{}-{id}", req.owner.token()),
                &source.name,
                req.seed,
            );
            driver
                .write_to(dir.join(name))
                .map_err(|e| ApiError::Internal(e.to_string()))?;
        }
        let now = Instant::now();
        let session = PlaySession {
            id: id.clone(),
            owner: req.owner,
            created: now,
            last_active: now,
            driver,
        };
        let frame = session.frame();
        self.sessions
            .lock()
            .expect("session map poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(SessionCreated { id, frame })
    }

    /// Looks up a live session; an idle one is dropped and reported unknown.
    pub async fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        let handle = self
            .sessions
            .lock()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))?;
        let idle = handle.lock().await.last_active.elapsed();
        if idle > self.config.idle_timeout {
            self.remove(id);
            return Err(ApiError::UnknownSession(id.to_string()));
        }
        Ok(handle)
    }

    pub async fn act(&self, id: &str, action: Action) -> Result<ActionResponse, ApiError> {
        let handle = self.session(id).await?;
        let mut s = handle.lock().await;
        s.act(action)
    }

    fn remove(&self, id: &str) {
        self.sessions
            .lock()
            .expect("session map poisoned")
            .remove(id);
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    /// Drops every session idle for longer than the timeout. Traces were written step by
    /// step, so the files keep everything played so far. Returns the dropped ids.
    pub fn sweep(&self) -> Vec<String> {
        let timeout = self.config.idle_timeout;
        let mut map = self.sessions.lock().expect("session map poisoned");
        let expired: Vec<String> = map
            .iter()
            .filter(|(_, h)| {
                h.try_lock()
                    .is_ok_and(|s| s.last_active.elapsed() > timeout)
            })
            .map(|(id, _)| id.clone())
            .collect();
        for id in &expired {
            map.remove(id);
        }
        expired
    }
}

fn session_error(e: RunError) -> ApiError {
    let parse = |message: String| {
        ApiError::Parse(vec![DiagnosticView {
            file: "game.vgdl".into(),
            line: 0,
            col: 0,
            message,
        }])
    };
    match e {
        RunError::Bundle(BundleError::Invalid { diagnostics, .. }) => {
            ApiError::Parse(diagnostics.iter().map(DiagnosticView::from).collect())
        }
        RunError::Engine(EngineError::InvalidBundle(m)) => parse(m),
        RunError::Obs(o) => parse(o.to_string()),
        other => ApiError::Internal(other.to_string()),
    }
}
