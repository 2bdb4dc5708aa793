//! Live tuning service: one render loop streaming frames and stats over
//! WebSocket and taking material, camera and quality changes between
//! frames.
//!
//! Routes: `GET /ws` upgrades to the protocol socket and `GET /descriptor`
//! returns the current session descriptor as JSON.

pub mod protocol;
mod session;

use std::sync::{mpsc as std_mpsc, Arc, RwLock};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};

use crate::error::{Error, Result};
use protocol::{Envelope, ErrorReply, ServerMessage};
pub use session::{SessionConfig, MAX_SIZE};
use session::{text, Request, Session};

/// Published messages buffered per subscriber before it starts skipping.
const FRAME_BUFFER: usize = 8;

#[derive(Clone)]
struct AppState {
    requests: std_mpsc::Sender<Request>,
    frames: broadcast::Sender<Message>,
    descriptor: Arc<RwLock<String>>,
}

/// Starts the render loop and serves the protocol on `listener` until the
/// listener fails. The render loop stops once the server is dropped.
pub async fn serve(listener: TcpListener, cfg: SessionConfig) -> Result<()> {
    let (frames, _) = broadcast::channel(FRAME_BUFFER);
    let descriptor = Arc::new(RwLock::new(String::new()));
    let session = Session::new(cfg, frames.clone(), descriptor.clone())?;
    let (requests, rx) = std_mpsc::channel();
    std::thread::Builder::new()
        .name("render-loop".into())
        .spawn(move || session.run(rx))
        .map_err(Error::io("render-loop thread"))?;
    let app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/descriptor", get(descriptor_handler))
        .with_state(AppState { requests, frames, descriptor });
    let addr = listener.local_addr().map_err(Error::io("listener"))?;
    axum::serve(listener, app).await.map_err(Error::io(addr.to_string()))
}

async fn descriptor_handler(State(state): State<AppState>) -> impl IntoResponse {
    let json = state.descriptor.read().expect("descriptor lock").clone();
    ([(header::CONTENT_TYPE, "application/json")], json)
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = state.frames.subscribe();
    let (reply, mut replies) = mpsc::unbounded_channel::<Message>();
    if state.requests.send(Request::Subscribe(reply.clone())).is_err() {
        return;
    }
    let writer = tokio::spawn(async move {
        loop {
            let msg = tokio::select! {
                m = replies.recv() => match m {
                    Some(m) => m,
                    None => break,
                },
                m = frames.recv() => match m {
                    Ok(m) => m,
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            if sink.send(msg).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let body = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        match serde_json::from_str::<Envelope>(&body) {
            Ok(Envelope { seq, command }) => {
                if state.requests.send(Request::Command { seq, command, reply: reply.clone() }).is_err() {
                    break;
                }
            }
            Err(e) => {
                let _ = reply.send(text(&ServerMessage::Error(ErrorReply::bad_request(e.to_string()))));
            }
        }
    }
    writer.abort();
}
