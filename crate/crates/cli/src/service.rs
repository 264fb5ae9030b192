//! WebSocket bridge for console clients plus a read-only status endpoint.
//!
//! The session lives on its own thread and consumes inputs one at a time from
//! a channel, so frames from every client are serialized through one loop.
//! Outgoing frames are numbered and fanned out through a broadcast channel;
//! a new client subscribes and takes its snapshot under the same lock the
//! publisher holds, so it sees every later frame exactly once.

use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use dobby_core::session::Step;
use dobby_core::{Input, Session, TranscriptEntry};
use futures::{SinkExt, StreamExt};
use serde_json::json;
use tokio::sync::broadcast;

use crate::frames::{error_frame, parse_in_frame, OutFrame, FRAME_VERSION};
use crate::runner::{Pacer, Runner};

const BROADCAST_CAPACITY: usize = 4096;

enum Command {
    Input(Input),
    Shutdown,
}

struct Hub {
    seq: u64,
    inputs_processed: u64,
    transcript: Vec<TranscriptEntry>,
    last_state: OutFrame,
    frames: broadcast::Sender<OutFrame>,
}

impl Hub {
    fn snapshot_frame(&self) -> OutFrame {
        let OutFrame::StateUpdate { session, metrics, .. } = &self.last_state else {
            unreachable!("last_state is always a state update")
        };
        OutFrame::Snapshot {
            v: FRAME_VERSION,
            seq: self.seq,
            session: session.clone(),
            transcript: self.transcript.clone(),
            metrics: metrics.clone(),
            inputs_processed: self.inputs_processed,
        }
    }

    fn send(&mut self, make: impl FnOnce(u64) -> OutFrame) {
        self.seq += 1;
        // no receivers is fine
        let _ = self.frames.send(make(self.seq));
    }

    fn publish(&mut self, session: &Session, step: Step, from_input: bool) {
        for event in step.events {
            self.send(|seq| OutFrame::Event {
                v: FRAME_VERSION,
                seq,
                event,
            });
        }
        for entry in step.transcript {
            self.transcript.push(entry.clone());
            self.send(|seq| OutFrame::Transcript {
                v: FRAME_VERSION,
                seq,
                entry,
            });
        }
        if from_input {
            self.inputs_processed += 1;
        }
        self.seq += 1;
        let state = OutFrame::StateUpdate {
            v: FRAME_VERSION,
            seq: self.seq,
            inputs_processed: self.inputs_processed,
            session: session.snapshot(),
            metrics: session.metrics(),
        };
        let _ = self.frames.send(state.clone());
        self.last_state = state;
    }
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::Sender<Command>,
    hub: Arc<Mutex<Hub>>,
    clients: Arc<AtomicUsize>,
}

pub struct ServiceHandle {
    pub addr: SocketAddr,
    commands: mpsc::Sender<Command>,
    server: tokio::task::JoinHandle<()>,
    engine: std::thread::JoinHandle<io::Result<Session>>,
}

impl ServiceHandle {
    /// Stops accepting input, writes metrics and returns the session.
    pub async fn shutdown(self) -> io::Result<Session> {
        let _ = self.commands.send(Command::Shutdown);
        self.server.abort();
        tokio::task::spawn_blocking(move || self.engine.join().expect("engine thread panicked"))
            .await
            .expect("join task failed")
    }
}

fn engine_loop(mut runner: Runner, speed: f64, commands: mpsc::Receiver<Command>, hub: Arc<Mutex<Hub>>) -> io::Result<Session> {
    let mut pacer = Pacer::new(speed);
    loop {
        let cmd = if pacer.realtime() {
            match commands.recv_timeout(pacer.tick_interval()) {
                Ok(c) => Some(c),
                Err(RecvTimeoutError::Timeout) => None,
                Err(RecvTimeoutError::Disconnected) => break,
            }
        } else {
            match commands.recv() {
                Ok(c) => Some(c),
                Err(_) => break,
            }
        };
        let due = pacer.due_ms();
        if due > 0 {
            let step = runner.apply(&Input::Advance { ms: due })?;
            hub.lock().expect("poisoned").publish(&runner.session, step, false);
        }
        match cmd {
            Some(Command::Input(input)) => {
                let step = runner.apply(&input)?;
                hub.lock().expect("poisoned").publish(&runner.session, step, true);
            }
            Some(Command::Shutdown) => break,
            None => {}
        }
    }
    runner.finish()
}

/// Binds `addr` and serves until [`ServiceHandle::shutdown`].
pub async fn start_service(runner: Runner, speed: f64, addr: SocketAddr) -> io::Result<ServiceHandle> {
    let (frames, _) = broadcast::channel(BROADCAST_CAPACITY);
    let initial = OutFrame::StateUpdate {
        v: FRAME_VERSION,
        seq: 0,
        inputs_processed: 0,
        session: runner.session.snapshot(),
        metrics: runner.session.metrics(),
    };
    let hub = Arc::new(Mutex::new(Hub {
        seq: 0,
        inputs_processed: 0,
        transcript: runner.session.transcript().to_vec(),
        last_state: initial,
        frames,
    }));
    let (tx, rx) = mpsc::channel();
    let engine_hub = hub.clone();
    let engine = std::thread::Builder::new()
        .name("dobby-engine".into())
        .spawn(move || engine_loop(runner, speed, rx, engine_hub))?;

    let state = AppState {
        commands: tx.clone(),
        hub,
        clients: Arc::new(AtomicUsize::new(0)),
    };
    let app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/status", get(status_handler))
        .with_state(state);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let server = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            log::error!("server stopped: {e}");
        }
    });
    log::info!("console bridge listening on ws://{addr}/ws");
    Ok(ServiceHandle {
        addr,
        commands: tx,
        server,
        engine,
    })
}

async fn status_handler(State(app): State<AppState>) -> Json<serde_json::Value> {
    let hub = app.hub.lock().expect("poisoned");
    let OutFrame::Snapshot {
        seq,
        session,
        metrics,
        inputs_processed,
        ..
    } = hub.snapshot_frame()
    else {
        unreachable!()
    };
    Json(json!({
        "v": FRAME_VERSION,
        "seq": seq,
        "inputs_processed": inputs_processed,
        "clients": app.clients.load(Ordering::SeqCst),
        "session": session,
        "metrics": metrics,
    }))
}

async fn ws_handler(ws: WebSocketUpgrade, State(app): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, app)).into_response()
}

fn encode(frame: &OutFrame) -> Message {
    Message::Text(serde_json::to_string(frame).expect("frames serialize"))
}

async fn client(socket: WebSocket, app: AppState) {
    app.clients.fetch_add(1, Ordering::SeqCst);
    let (snapshot, mut frames) = {
        let hub = app.hub.lock().expect("poisoned");
        (hub.snapshot_frame(), hub.frames.subscribe())
    };
    let (mut sink, mut stream) = socket.split();
    let (private_tx, mut private_rx) = tokio::sync::mpsc::unbounded_channel::<OutFrame>();

    let writer = tokio::spawn(async move {
        if sink.send(encode(&snapshot)).await.is_err() {
            return;
        }
        loop {
            let frame = tokio::select! {
                f = frames.recv() => match f {
                    Ok(f) => f,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        let msg = format!("client fell {n} frames behind; reconnect for a fresh snapshot");
                        let _ = sink.send(encode(&OutFrame::Error { v: FRAME_VERSION, message: msg })).await;
                        let _ = sink.close().await;
                        return;
                    }
                    Err(broadcast::error::RecvError::Closed) => return,
                },
                f = private_rx.recv() => match f {
                    Some(f) => f,
                    None => return,
                },
            };
            if sink.send(encode(&frame)).await.is_err() {
                return;
            }
        }
    });

    while let Some(msg) = stream.next().await {
        let text = match msg {
            Ok(Message::Text(t)) => t,
            Ok(Message::Binary(b)) => String::from_utf8_lossy(&b).into_owned(),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        match parse_in_frame(&text) {
            Ok(frame) => {
                if app.commands.send(Command::Input(frame.into())).is_err() {
                    break;
                }
            }
            Err(e) => {
                let _ = private_tx.send(error_frame(&e));
            }
        }
    }
    writer.abort();
    app.clients.fetch_sub(1, Ordering::SeqCst);
}
