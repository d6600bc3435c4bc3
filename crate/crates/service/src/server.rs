//! Websocket transport: one [`Session`] per connection on `/session`.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{CloseFrame, Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{mpsc, watch};

use crate::protocol::{ClientMessage, ProtocolError, ServerMessage};
use crate::session::{Session, SessionSetup};

/// Close code sent on protocol version mismatch.
pub const CLOSE_PROTOCOL: u16 = 1002;

pub fn router(setup: Arc<SessionSetup>) -> Router {
    Router::new().route("/session", get(upgrade)).with_state(setup)
}

pub async fn serve(listener: TcpListener, setup: Arc<SessionSetup>) -> std::io::Result<()> {
    axum::serve(listener, router(setup)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(setup): State<Arc<SessionSetup>>) -> Response {
    ws.on_upgrade(move |socket| async move {
        if let Err(e) = run_session(socket, setup).await {
            tracing::debug!("session ended: {e}");
        }
    })
}

enum Inbound {
    Control(ClientMessage),
    Reject(ProtocolError),
}

async fn run_session(socket: WebSocket, setup: Arc<SessionSetup>) -> Result<(), axum::Error> {
    let (mut tx, mut rx) = socket.split();
    let mut session = match Session::new(setup.clone(), 0) {
        Ok(s) => s,
        Err(e) => {
            tx.send(Message::Text(ServerMessage::error(e).encode().into())).await?;
            return Ok(());
        }
    };
    // Latest-value mailbox for pilot input; ordered queue for everything else.
    let (input_tx, mut input_rx) = watch::channel::<Option<Vec<f64>>>(None);
    let (ctl_tx, mut ctl_rx) = mpsc::unbounded_channel::<Inbound>();
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = rx.next().await {
            let text = match msg {
                Message::Text(t) => t,
                Message::Close(_) => break,
                _ => continue,
            };
            match ClientMessage::decode(&text) {
                Ok(ClientMessage::Input { action }) => {
                    let _ = input_tx.send(Some(action));
                }
                Ok(other) => {
                    if ctl_tx.send(Inbound::Control(other)).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    let fatal = e.is_fatal();
                    if ctl_tx.send(Inbound::Reject(e)).is_err() || fatal {
                        break;
                    }
                }
            }
        }
    });

    for m in session.greeting() {
        tx.send(Message::Text(m.encode().into())).await?;
    }
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(1.0 / setup.tick_hz));
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    ticker.tick().await;
    let result = loop {
        ticker.tick().await;
        let mut out = Vec::new();
        let mut close = None;
        while let Ok(inbound) = ctl_rx.try_recv() {
            match inbound {
                Inbound::Control(m) => out.extend(session.handle(m)),
                Inbound::Reject(e) if e.is_fatal() => {
                    close = Some(e.to_string());
                    break;
                }
                Inbound::Reject(e) => out.push(ServerMessage::error(e)),
            }
        }
        if let Some(reason) = close {
            let frame = CloseFrame { code: CLOSE_PROTOCOL, reason: Utf8Bytes::from(reason) };
            let _ = tx.send(Message::Close(Some(frame))).await;
            break Ok(());
        }
        if input_rx.has_changed().unwrap_or(false) {
            if let Some(action) = input_rx.borrow_and_update().clone() {
                out.extend(session.handle(ClientMessage::Input { action }));
            }
        }
        out.extend(session.tick());
        let mut failed = None;
        for m in out {
            if let Err(e) = tx.send(Message::Text(m.encode().into())).await {
                failed = Some(e);
                break;
            }
        }
        if let Some(e) = failed {
            break Err(e);
        }
        if reader.is_finished() && ctl_rx.is_empty() {
            break Ok(());
        }
    };
    reader.abort();
    result
}
