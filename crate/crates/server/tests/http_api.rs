use std::sync::Arc;
use std::time::Duration;

use futures::StreamExt;
use nudge_core::{ManualClock, MemoryStore, ServiceConfig, SessionService};
use serde_json::{json, Value};

struct TestServer {
    base: String,
    clock: Arc<ManualClock>,
    http: reqwest::Client,
}

async fn start() -> TestServer {
    let clock = Arc::new(ManualClock::new(10_000));
    let service = SessionService::new(ServiceConfig::default(), clock.clone(), Arc::new(MemoryStore::new()), 5).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(nudge_server::serve(listener, Arc::new(service)));
    TestServer {
        base: format!("http://{addr}"),
        clock,
        http: reqwest::Client::new(),
    }
}

impl TestServer {
    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let resp = self.http.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    async fn create(&self) -> (String, String) {
        let (status, v) = self.post("/sessions", json!({})).await;
        assert_eq!(status, 201);
        (v["session_id"].as_str().unwrap().into(), v["presenter_token"].as_str().unwrap().into())
    }

    async fn join(&self, id: &str) -> String {
        let (status, v) = self.post(&format!("/sessions/{id}/join"), json!({})).await;
        assert_eq!(status, 200);
        v["participant_token"].as_str().unwrap().into()
    }

    async fn react(&self, id: &str, token: &str, kind: &str) -> (u16, Value) {
        self.post(&format!("/sessions/{id}/reactions"), json!({"participant_token": token, "kind": kind}))
            .await
    }
}

#[derive(Debug)]
struct Frame {
    id: Option<u64>,
    event: String,
    data: Value,
}

/// Reads frames until `n` have arrived or the stream ends.
async fn read_frames(resp: reqwest::Response, n: usize) -> Vec<Frame> {
    let mut body = resp.bytes_stream();
    let mut buf = String::new();
    let mut frames = Vec::new();
    while frames.len() < n {
        let chunk = match tokio::time::timeout(Duration::from_secs(5), body.next()).await {
            Ok(Some(Ok(c))) => c,
            _ => break,
        };
        buf.push_str(std::str::from_utf8(&chunk).unwrap());
        while let Some(pos) = buf.find("\n\n") {
            let raw: String = buf.drain(..pos + 2).collect();
            let mut frame = Frame { id: None, event: String::new(), data: Value::Null };
            let mut comment_only = true;
            for line in raw.lines() {
                if let Some(v) = line.strip_prefix("id:") {
                    frame.id = v.trim().parse().ok();
                    comment_only = false;
                } else if let Some(v) = line.strip_prefix("event:") {
                    frame.event = v.trim().to_string();
                    comment_only = false;
                } else if let Some(v) = line.strip_prefix("data:") {
                    frame.data = serde_json::from_str(v.trim()).unwrap();
                    comment_only = false;
                }
            }
            if !comment_only {
                frames.push(frame);
            }
        }
    }
    frames
}

#[tokio::test]
async fn full_lifecycle_over_http() {
    let s = start().await;
    let (id, presenter) = s.create().await;
    assert_eq!(id.len(), 6);
    assert!(id.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit()));

    let student = s.join(&id).await;
    let (status, v) = s.react(&id, &student, "confused").await;
    assert_eq!(status, 200);
    assert_eq!(v["verdict"]["kind"], "accept");
    assert_eq!(v["cooldown_remaining_ms"], 20_000);
    assert_eq!(v["count_in_window"], 1);

    s.clock.advance(5_000);
    let (status, v) = s.react(&id, &student, "confused").await;
    assert_eq!(status, 200);
    assert_eq!(v["verdict"]["kind"], "reject_cooldown");
    assert_eq!(v["verdict"]["remaining_ms"], 15_000);
    assert_eq!(v["count_in_window"], Value::Null);

    let other = s.join(&id).await;
    let (_, v) = s.react(&id, &other, "confused").await;
    assert_eq!(v["count_in_window"], 2);

    let resp = s
        .http
        .get(format!("{}/sessions/{id}/stream?role=presenter", s.base))
        .bearer_auth(&presenter)
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 200);
    assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/event-stream"));
    let frames = read_frames(resp, 2).await;
    assert_eq!(frames[0].id, Some(1));
    assert_eq!(frames[0].event, "aggregated");
    assert_eq!(frames[0].data["play_haptic"], true);
    assert_eq!(frames[0].data["haptic"]["repeats"], 4);
    assert_eq!(frames[1].data["count"], 2);
    assert_eq!(frames[1].data["play_haptic"], false);
    assert!(frames[1].data.get("haptic").is_none());

    let analytics: Value = s
        .http
        .get(format!("{}/sessions/{id}/analytics", s.base))
        .bearer_auth(&presenter)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(analytics["cumulative"]["confused"], 2);
    for key in ["log", "timeline", "cumulative", "user_shares", "flags"] {
        assert!(analytics.get(key).is_some(), "{key}");
    }

    let resp = s.http.delete(format!("{}/sessions/{id}", s.base)).bearer_auth(&presenter).send().await.unwrap();
    assert_eq!(resp.status(), 200);
    let record: Value = resp.json().await.unwrap();
    assert_eq!(record["entries"].as_array().unwrap().len(), 3);

    let (status, _) = s.react(&id, &student, "confident").await;
    assert_eq!(status, 410);
    let (status, _) = s.post(&format!("/sessions/{id}/join"), json!({})).await;
    assert_eq!(status, 410);

    let again: Value = s
        .http
        .delete(format!("{}/sessions/{id}", s.base))
        .bearer_auth(&presenter)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(again, record);
}

#[tokio::test]
async fn error_statuses() {
    let s = start().await;
    let (status, _) = s.post("/sessions/ZZZZZZ/join", json!({})).await;
    assert_eq!(status, 404);
    let (id, presenter) = s.create().await;
    let (status, _) = s.react(&id, "not-a-token", "confused").await;
    assert_eq!(status, 403);
    let (status, _) = s.react("ZZZZZZ", "x", "confused").await;
    assert_eq!(status, 404);

    let student = s.join(&id).await;
    let (status, _) = s.react(&id, &student, "sleepy").await;
    assert!(status == 400 || status == 422, "{status}");

    let no_auth = s.http.get(format!("{}/sessions/{id}/stream", s.base)).send().await.unwrap();
    assert_eq!(no_auth.status(), 403);
    let wrong = s
        .http
        .delete(format!("{}/sessions/{id}", s.base))
        .bearer_auth("wrong")
        .send()
        .await
        .unwrap();
    assert_eq!(wrong.status(), 403);
    let bad_role = s
        .http
        .get(format!("{}/sessions/{id}/stream?role=janitor", s.base))
        .bearer_auth(&presenter)
        .send()
        .await
        .unwrap();
    assert_eq!(bad_role.status(), 400);
}

#[tokio::test]
async fn stream_resumes_from_last_seq_and_terminates() {
    let s = start().await;
    let (id, presenter) = s.create().await;
    for _ in 0..7 {
        let t = s.join(&id).await;
        s.clock.advance(1_000);
        s.react(&id, &t, "hand_raise").await;
    }
    let resp = s
        .http
        .get(format!("{}/sessions/{id}/stream?role=presenter&last_seq=5", s.base))
        .bearer_auth(&presenter)
        .send()
        .await
        .unwrap();
    let reader = tokio::spawn(read_frames(resp, 10));
    tokio::time::sleep(Duration::from_millis(100)).await;
    s.http.delete(format!("{}/sessions/{id}", s.base)).bearer_auth(&presenter).send().await.unwrap();
    let frames = reader.await.unwrap();
    let ids: Vec<_> = frames.iter().map(|f| f.id.unwrap()).collect();
    assert_eq!(ids, [6, 7, 8]);
    assert_eq!(frames[2].event, "end");

    let resp = s
        .http
        .get(format!("{}/sessions/{id}/stream", s.base))
        .bearer_auth(&presenter)
        .header("Last-Event-ID", "7")
        .send()
        .await
        .unwrap();
    let frames = read_frames(resp, 10).await;
    assert_eq!(frames.len(), 1);
    assert_eq!(frames[0].event, "end");
}

#[tokio::test]
async fn researcher_stream_sees_reactions_and_moderation() {
    let s = start().await;
    let (id, presenter) = s.create().await;
    let student = s.join(&id).await;
    for (i, kind) in ["confused", "hand_raise", "confident", "confused", "hand_raise", "confident"].iter().enumerate() {
        if i > 0 {
            s.clock.advance(20_000);
        }
        s.react(&id, &student, kind).await;
    }
    let resp = s
        .http
        .get(format!("{}/sessions/{id}/stream?role=researcher", s.base))
        .bearer_auth(&presenter)
        .send()
        .await
        .unwrap();
    let frames = read_frames(resp, 12).await;
    let names: Vec<&str> = frames.iter().map(|f| f.event.as_str()).collect();
    assert_eq!(names.iter().filter(|n| **n == "reaction").count(), 5);
    let moderation: Vec<_> = frames.iter().filter(|f| f.event == "moderation").map(|f| f.data["action"].clone()).collect();
    assert_eq!(moderation, [json!("warned"), json!("banned")]);
    let ids: Vec<u64> = frames.iter().map(|f| f.id.unwrap()).collect();
    assert_eq!(ids, (1..=frames.len() as u64).collect::<Vec<_>>());
}
