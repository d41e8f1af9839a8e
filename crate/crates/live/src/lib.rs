//! Live mode: one simulation session streamed to any number of WebSocket
//! clients, with pause/resume/reset, rate control and parameter patches.
//!
//! Routes:
//! - `GET /ws` WebSocket; the first server message is a `snapshot`, then
//!   `frame`s at the broadcast rate. Slow clients skip frames.
//! - `GET /api/scenario` effective scenario (JSON) including every patch
//!   applied so far; feeding it to an offline run reproduces the session.
//! - `GET /api/scenario.toml` the same as TOML.
//! - everything else: static UI from `ui_dir`, or a built-in viewer.

pub mod protocol;
mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use swarmsim::{EngineError, ScenarioF64};
use tokio::net::TcpListener;
use tokio::sync::{oneshot, watch};
use tower_http::services::ServeDir;

pub use protocol::{AgentView, ClientMessage, Frame, MapView, PatchRequest, ServerMessage, Snapshot, PROTOCOL_VERSION};
pub use session::SessionOptions;

use session::{Command, Published};

const INDEX_HTML: &str = include_str!("../assets/index.html");

#[derive(Debug, thiserror::Error)]
pub enum LiveError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("ui directory {0} does not exist")]
    UiDir(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default)]
pub struct LiveOptions {
    pub session: SessionOptions,
    /// Serve this directory instead of the built-in viewer.
    pub ui_dir: Option<PathBuf>,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::Sender<Command>,
    frames: watch::Receiver<Arc<Published>>,
}

impl AppState {
    async fn ask<R>(&self, make: impl FnOnce(oneshot::Sender<R>) -> Command) -> Option<R> {
        let (tx, rx) = oneshot::channel();
        self.commands.send(make(tx)).ok()?;
        rx.await.ok()
    }
}

/// A bound server. Dropping it without [`LiveServer::shutdown`] leaves the
/// listener running on the runtime.
pub struct LiveServer {
    local_addr: SocketAddr,
    commands: mpsc::Sender<Command>,
    stop: oneshot::Sender<()>,
    server: tokio::task::JoinHandle<std::io::Result<()>>,
    session: thread::JoinHandle<()>,
}

impl LiveServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stops the session thread and the listener.
    pub async fn shutdown(self) -> Result<(), LiveError> {
        let _ = self.commands.send(Command::Shutdown);
        let _ = self.stop.send(());
        let res = self.server.await.map_err(std::io::Error::other)?;
        let _ = tokio::task::spawn_blocking(move || self.session.join()).await;
        Ok(res?)
    }

    /// Runs until the listener fails or `signal` resolves.
    pub async fn run_until(mut self, signal: impl std::future::Future<Output = ()>) -> Result<(), LiveError> {
        tokio::select! {
            _ = signal => self.shutdown().await,
            res = &mut self.server => {
                let _ = self.commands.send(Command::Shutdown);
                let _ = tokio::task::spawn_blocking(move || self.session.join()).await;
                Ok(res.map_err(std::io::Error::other)??)
            }
        }
    }
}

fn router(opts: &LiveOptions, state_tx: mpsc::Sender<Command>, frames: watch::Receiver<Arc<Published>>) -> Router {
    let state = AppState {
        commands: state_tx,
        frames,
    };
    let api = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/api/scenario", get(scenario_json))
        .route("/api/scenario.toml", get(scenario_toml))
        .with_state(state);
    match &opts.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(INDEX_HTML) })),
    }
}

/// Starts the session and binds the listener. Use port 0 for an ephemeral port.
pub async fn bind(scenario: ScenarioF64, addr: SocketAddr, opts: LiveOptions) -> Result<LiveServer, LiveError> {
    if let Some(dir) = &opts.ui_dir {
        if !dir.is_dir() {
            return Err(LiveError::UiDir(dir.clone()));
        }
    }
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| LiveError::Bind { addr, source })?;
    let local_addr = listener.local_addr()?;
    let (commands, frames, session) = session::start(scenario, opts.session.clone())?;
    let app = router(&opts, commands.clone(), frames);
    let (stop, stopped) = oneshot::channel::<()>();
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await
    });
    tracing::info!("live server on http://{local_addr}");
    Ok(LiveServer {
        local_addr,
        commands,
        stop,
        server,
        session,
    })
}

/// Serves until Ctrl-C.
pub async fn serve(scenario: ScenarioF64, addr: SocketAddr, opts: LiveOptions) -> Result<(), LiveError> {
    let server = bind(scenario, addr, opts).await?;
    server
        .run_until(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn scenario_json(State(state): State<AppState>) -> Response {
    match state.ask(Command::Scenario).await {
        Some(s) => Json(s).into_response(),
        None => StatusCode::SERVICE_UNAVAILABLE.into_response(),
    }
}

async fn scenario_toml(State(state): State<AppState>) -> Response {
    match state.ask(Command::Scenario).await.map(|s| s.to_toml()) {
        Some(Ok(text)) => ([(header::CONTENT_TYPE, "application/toml")], text).into_response(),
        Some(Err(e)) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
        None => StatusCode::SERVICE_UNAVAILABLE.into_response(),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = state.frames.clone();
    let Some(snapshot) = state.ask(Command::Snapshot).await else {
        return;
    };
    let mut epoch = frames.borrow_and_update().epoch;
    if sink.send(Message::Text(snapshot.into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            changed = frames.changed() => {
                if changed.is_err() {
                    break;
                }
                let latest = frames.borrow_and_update().clone();
                if latest.epoch != epoch {
                    epoch = latest.epoch;
                    let Some(snapshot) = state.ask(Command::Snapshot).await else { break };
                    if sink.send(Message::Text(snapshot.into())).await.is_err() {
                        break;
                    }
                }
                if sink.send(Message::Text(latest.frame.as_str().into())).await.is_err() {
                    break;
                }
            }
            incoming = stream.next() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let reply = match serde_json::from_str::<ClientMessage>(text.as_str()) {
                    Ok(msg) => match state.ask(|reply| Command::Client { msg, reply }).await {
                        Some(r) => r,
                        None => break,
                    },
                    Err(e) => ServerMessage::Error {
                        id: None,
                        message: format!("malformed message: {e}"),
                        violations: Vec::new(),
                    },
                };
                let json = serde_json::to_string(&reply).expect("server messages serialize");
                if sink.send(Message::Text(json.into())).await.is_err() {
                    break;
                }
            }
        }
    }
}
