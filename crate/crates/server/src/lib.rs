//! HTTP and WebSocket front end for the arena.
//!
//! | Route | Body / reply |
//! |---|---|
//! | `POST /sessions` | [`CreateSession`] → [`SessionCreated`] |
//! | `GET /sessions/{id}` | [`SessionInfo`] |
//! | `POST /sessions/{id}/action` | [`ActionRequest`] → [`ActionResponse`] |
//! | `GET /sessions/{id}/live` | WebSocket: [`ActionRequest`] in, [`LiveMessage`] out |
//! | `GET /replays?game=&agent=` | `[`[`ReplayEntry`]`]` |
//! | `GET /replays/{id}` | full session trace |
//! | `GET /replays/{id}/frame/{step}` | [`FrameView`] |
//! | `GET /bundles` | `[`[`BundleEntry`]`]` |
//! | `GET /bundles/{id}/description` | bundle source text |
//!
//! Failures reply with an [`ErrorBody`].

mod error;
mod frame;
mod replay;
mod session;

use std::sync::Arc;
use std::time::Duration;

use arena_core::vgdl::BundleSource;
use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::Response;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

pub use error::{ApiError, DiagnosticView, ErrorBody};
pub use frame::{Cell, FrameView, InventoryItem};
pub use replay::{get_replay, list_replays, replay_frame, ReplayEntry, ReplayFilter};
pub use session::{
    ActionRequest, ActionResponse, AppState, CreateSession, Owner, PlaySession, ServerConfig,
    SessionCreated, SessionHandle, SessionInfo,
};

type Shared = State<Arc<AppState>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleEntry {
    pub name: String,
    pub levels: usize,
}

/// Server-to-client message on the live socket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LiveMessage {
    Frame { frame: FrameView },
    Step(ActionResponse),
    Error(ErrorBody),
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info))
        .route("/sessions/{id}/action", post(post_action))
        .route("/sessions/{id}/live", get(live))
        .route("/replays", get(replays))
        .route("/replays/{id}", get(replay))
        .route("/replays/{id}/frame/{step}", get(frame))
        .route("/bundles", get(bundles))
        .route("/bundles/{id}/description", get(description))
        .with_state(state)
}

/// Serves until the listener fails, sweeping idle sessions in the background.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    let sweeper = state.clone();
    let period = (state.config.idle_timeout / 2).max(Duration::from_millis(50));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            sweeper.sweep();
        }
    });
    axum::serve(listener, router(state)).await
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(t)| t)
        .map_err(|e| ApiError::BadRequest(e.body_text()))
}

async fn create_session(
    State(app): Shared,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let req = json_body(body)?;
    Ok((StatusCode::CREATED, Json(app.create_session(&req)?)))
}

async fn session_info(
    State(app): Shared,
    Path(id): Path<String>,
) -> Result<Json<SessionInfo>, ApiError> {
    let handle = app.session(&id).await?;
    let info = handle.lock().await.info();
    Ok(Json(info))
}

async fn post_action(
    State(app): Shared,
    Path(id): Path<String>,
    body: Result<Json<ActionRequest>, JsonRejection>,
) -> Result<Json<ActionResponse>, ApiError> {
    let req = json_body(body)?;
    Ok(Json(app.act(&id, req.action).await?))
}

async fn live(
    State(app): Shared,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let handle = app.session(&id).await?;
    let frame = handle.lock().await.frame();
    Ok(ws.on_upgrade(move |socket| live_loop(socket, app, id, frame)))
}

async fn send(socket: &mut WebSocket, msg: &LiveMessage) -> bool {
    let text = serde_json::to_string(msg).expect("live messages serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn live_loop(mut socket: WebSocket, app: Arc<AppState>, id: String, frame: FrameView) {
    if !send(&mut socket, &LiveMessage::Frame { frame }).await {
        return;
    }
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let reply = match serde_json::from_str::<ActionRequest>(&text) {
            Ok(req) => app.act(&id, req.action).await,
            Err(e) => Err(ApiError::BadRequest(e.to_string())),
        };
        let (msg, fatal) = match reply {
            Ok(r) => (LiveMessage::Step(r), false),
            Err(e) => {
                let fatal = matches!(e, ApiError::UnknownSession(_));
                (LiveMessage::Error(e.body()), fatal)
            }
        };
        if !send(&mut socket, &msg).await || fatal {
            break;
        }
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn replays(
    State(app): Shared,
    Query(filter): Query<ReplayFilter>,
) -> Result<Json<Vec<ReplayEntry>>, ApiError> {
    let Some(dir) = app.config.trace_dir.clone() else {
        return Ok(Json(Vec::new()));
    };
    Ok(Json(blocking(move || list_replays(&dir, &filter)).await?))
}

fn trace_dir(app: &AppState, id: &str) -> Result<std::path::PathBuf, ApiError> {
    app.config
        .trace_dir
        .clone()
        .ok_or_else(|| ApiError::UnknownReplay(id.to_string()))
}

async fn replay(
    State(app): Shared,
    Path(id): Path<String>,
) -> Result<Json<arena_core::runner::SessionTrace>, ApiError> {
    let dir = trace_dir(&app, &id)?;
    Ok(Json(blocking(move || get_replay(&dir, &id)).await?))
}

async fn frame(
    State(app): Shared,
    Path((id, step)): Path<(String, usize)>,
) -> Result<Json<FrameView>, ApiError> {
    let dir = trace_dir(&app, &id)?;
    Ok(Json(blocking(move || replay_frame(&dir, &id, step)).await?))
}

async fn bundles(State(app): Shared) -> Json<Vec<BundleEntry>> {
    Json(
        app.config
            .bundles
            .iter()
            .map(|b| BundleEntry {
                name: b.name.clone(),
                levels: b.levels.len(),
            })
            .collect(),
    )
}

async fn description(
    State(app): Shared,
    Path(id): Path<String>,
) -> Result<Json<BundleSource>, ApiError> {
    app.bundle(&id)
        .cloned()
        .map(Json)
        .ok_or(ApiError::UnknownBundle(id))
}
