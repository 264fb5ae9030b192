#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use dobby_cli::config::{self, Cli};
use dobby_cli::output::Output;
use dobby_cli::runner::Runner;
use dobby_cli::service::{start_service, ServiceHandle};
use dobby_core::Session;
use futures::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio_tungstenite::tungstenite::Message;

pub type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().to_path_buf()
}

pub fn fixture(rel: &str) -> String {
    root().join(rel).to_string_lossy().into_owned()
}

/// Lab flags plus `extra`.
pub fn cli(extra: &[&str]) -> Cli {
    let mut args = vec![
        "dobby".to_string(),
        "--destinations".into(),
        fixture("fixtures/lab/destinations.txt"),
        "--items".into(),
        fixture("fixtures/lab/items.txt"),
        "--topics".into(),
        fixture("fixtures/lab/topics.txt"),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    Cli::parse_from(args)
}

pub fn apple_fetch_cli(extra: &[&str]) -> Cli {
    let backend = format!("scripted:{}", fixture("fixtures/fig4.json"));
    let mut args = vec!["--backend", backend.as_str()];
    args.extend_from_slice(extra);
    cli(&args)
}

pub fn session(cli: &Cli) -> Session {
    let lab = config::load_lab(cli).unwrap();
    let backend = config::chat_backend(cli).unwrap();
    let embeddings = config::embeddings(cli).unwrap();
    config::build_session(cli, &lab, backend, embeddings).unwrap()
}

pub async fn serve(cli: &Cli, speed: f64) -> ServiceHandle {
    let runner = Runner::new(session(cli), Output::default(), speed);
    start_service(runner, speed, "127.0.0.1:0".parse().unwrap()).await.unwrap()
}

pub async fn connect(addr: SocketAddr) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    ws
}

pub async fn send(ws: &mut Ws, frame: Value) {
    ws.send(Message::Text(frame.to_string())).await.unwrap();
}

pub async fn send_raw(ws: &mut Ws, text: &str) {
    ws.send(Message::Text(text.to_string())).await.unwrap();
}

pub async fn next(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("timed out waiting for a frame")
            .expect("connection closed")
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(&t).unwrap();
        }
    }
}

/// Frames up to and including the next `state_update`.
pub async fn until_state(ws: &mut Ws) -> Vec<Value> {
    let mut out = Vec::new();
    loop {
        let f = next(ws).await;
        let done = f["type"] == "state_update";
        out.push(f);
        if done {
            return out;
        }
    }
}

/// No frame arrives within `ms`.
pub async fn silent_for(ws: &mut Ws, ms: u64) -> bool {
    tokio::time::timeout(Duration::from_millis(ms), ws.next()).await.is_err()
}

pub async fn get_status(addr: SocketAddr) -> (u16, Value) {
    let mut s = tokio::net::TcpStream::connect(addr).await.unwrap();
    s.write_all(b"GET /status HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).await.unwrap();
    let code = buf.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = buf.split_once("\r\n\r\n").unwrap().1;
    (code, serde_json::from_str(body).unwrap())
}

pub fn utterance(text: &str) -> Value {
    serde_json::json!({"v": 1, "type": "user_utterance", "text": text})
}

pub fn render(entry: &Value) -> String {
    format!("{}: {}\n", entry["speaker"].as_str().unwrap(), entry["text"].as_str().unwrap())
}
