mod common;

use common::*;
use serde_json::json;

const HUNGRY: &str = "I'm really hungry right now.";
const APPLE: &str = "I'd like an apple.";

#[tokio::test]
async fn snapshot_is_first_frame() {
    let svc = serve(&apple_fetch_cli(&[]), 0.0).await;
    let mut ws = connect(svc.addr).await;
    let snap = next(&mut ws).await;
    assert_eq!(snap["type"], "snapshot");
    assert_eq!(snap["v"], 1);
    assert_eq!(snap["seq"], 0);
    assert_eq!(snap["inputs_processed"], 0);
    assert_eq!(snap["transcript"], json!([]));
    assert_eq!(snap["session"]["mode"], "conversational");
    assert_eq!(snap["session"]["robot"]["phase"], "idle");
    assert_eq!(snap["session"]["robot"]["sim"]["robot_pose"]["x"], 0.0);
    assert_eq!(snap["metrics"]["destinations_visited"], 0);
    svc.shutdown().await.unwrap();
}

#[tokio::test]
async fn bad_frames_get_errors_only_on_their_connection() {
    let svc = serve(&apple_fetch_cli(&[]), 0.0).await;
    let mut a = connect(svc.addr).await;
    let mut b = connect(svc.addr).await;
    next(&mut a).await;
    next(&mut b).await;

    for bad in [
        "not json",
        r#"{"type":"fly"}"#,
        r#"{"v":2,"type":"idle"}"#,
        r#"{"type":"user_utterance","text":"   "}"#,
    ] {
        send_raw(&mut a, bad).await;
        let f = next(&mut a).await;
        assert_eq!(f["type"], "error", "{bad}");
        assert_eq!(f["v"], 1);
        assert!(!f["message"].as_str().unwrap().is_empty());
    }
    assert!(silent_for(&mut b, 300).await, "error frames leaked to another client");

    // the session is untouched and still accepts input
    send(&mut a, utterance(HUNGRY)).await;
    let frames = until_state(&mut a).await;
    assert_eq!(frames.last().unwrap()["inputs_processed"], 1);
    svc.shutdown().await.unwrap();
}

#[tokio::test]
async fn clients_see_identical_frames() {
    let svc = serve(&apple_fetch_cli(&[]), 0.0).await;
    let mut a = connect(svc.addr).await;
    let mut b = connect(svc.addr).await;
    next(&mut a).await;
    next(&mut b).await;

    send(&mut a, utterance(HUNGRY)).await;
    let mut fa = until_state(&mut a).await;
    let mut fb = until_state(&mut b).await;
    send(&mut b, utterance(APPLE)).await;
    fa.extend(until_state(&mut a).await);
    fb.extend(until_state(&mut b).await);
    assert_eq!(fa, fb);

    // sequence numbers are gapless
    for (i, f) in fa.iter().enumerate() {
        assert_eq!(f["seq"], i as u64 + 1);
    }
    svc.shutdown().await.unwrap();
}

#[tokio::test]
async fn cancel_mid_plan_is_broadcast() {
    let svc = serve(&apple_fetch_cli(&[]), 0.0).await;
    let mut a = connect(svc.addr).await;
    let mut watcher = connect(svc.addr).await;
    next(&mut a).await;
    next(&mut watcher).await;

    send(&mut a, utterance(HUNGRY)).await;
    send(&mut a, utterance(APPLE)).await;
    send(&mut a, json!({"type": "advance", "ms": 1000})).await;
    send(&mut a, json!({"type": "cancel"})).await;
    let mut frames = Vec::new();
    for _ in 0..4 {
        frames.extend(until_state(&mut watcher).await);
    }
    let cancelled: Vec<_> = frames
        .iter()
        .filter(|f| f["type"] == "event" && f["event"]["kind"] == "plan_cancelled")
        .collect();
    assert_eq!(cancelled.len(), 1);
    assert_eq!(cancelled[0]["event"]["completed"], 0);
    assert_eq!(
        cancelled[0]["event"]["remaining"],
        json!(["Drive to Apple", "Pickup Apple", "Return to User"])
    );
    let last = frames.last().unwrap();
    assert_eq!(last["inputs_processed"], 4);
    assert_eq!(last["session"]["robot"]["phase"], "idle");
    assert_eq!(last["session"]["robot"]["sim"]["activity"]["activity"], "idle");

    // a late client's snapshot covers exactly the transcript streamed so far
    let mut late = connect(svc.addr).await;
    let snap = next(&mut late).await;
    let streamed: Vec<_> = frames
        .iter()
        .filter(|f| f["type"] == "transcript")
        .map(|f| f["entry"].clone())
        .collect();
    assert_eq!(snap["transcript"], json!(streamed));
    assert_eq!(snap["seq"], last["seq"]);
    assert_eq!(snap["session"], last["session"]);
    svc.shutdown().await.unwrap();
}

#[tokio::test]
async fn status_endpoint() {
    let svc = serve(&apple_fetch_cli(&[]), 0.0).await;
    let (code, body) = get_status(svc.addr).await;
    assert_eq!(code, 200);
    assert_eq!(body["v"], 1);
    assert_eq!(body["inputs_processed"], 0);
    assert_eq!(body["clients"], 0);
    assert_eq!(body["session"]["mode"], "conversational");

    let mut ws = connect(svc.addr).await;
    next(&mut ws).await;
    send(&mut ws, utterance(HUNGRY)).await;
    let frames = until_state(&mut ws).await;
    let (_, body) = get_status(svc.addr).await;
    assert_eq!(body["inputs_processed"], 1);
    assert_eq!(body["clients"], 1);
    assert_eq!(body["seq"], frames.last().unwrap()["seq"]);
    svc.shutdown().await.unwrap();
}

#[tokio::test]
async fn paced_service_runs_plans_without_input() {
    let svc = serve(&apple_fetch_cli(&[]), 100.0).await;
    let mut ws = connect(svc.addr).await;
    next(&mut ws).await;
    send(&mut ws, utterance(HUNGRY)).await;
    send(&mut ws, utterance(APPLE)).await;
    // about 13 simulated seconds of driving at 100x
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(8);
    loop {
        let f = next(&mut ws).await;
        if f["type"] == "event" && f["event"]["kind"] == "plan_completed" {
            break;
        }
        assert!(std::time::Instant::now() < deadline, "plan never completed");
    }
    let session = svc.shutdown().await.unwrap();
    assert_eq!(session.metrics().destinations_visited, 1);
}

#[tokio::test]
async fn baseline_mode_over_the_bridge() {
    let svc = serve(&cli(&["--mode", "baseline"]), 0.0).await;
    let mut ws = connect(svc.addr).await;
    let snap = next(&mut ws).await;
    assert_eq!(snap["session"]["mode"], "baseline");
    send(&mut ws, utterance("Tell me about robot soccer")).await;
    let frames = until_state(&mut ws).await;
    let lines: Vec<_> = frames.iter().filter(|f| f["type"] == "transcript").map(|f| render(&f["entry"])).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("DOBBY: Robot soccer"));
    svc.shutdown().await.unwrap();
}

