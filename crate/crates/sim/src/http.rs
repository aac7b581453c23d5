//! Drives a running server over HTTP in real time, one thread per active
//! student plus one presenter-stream reader.

use std::io::{BufRead, BufReader};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use nudge_core::{AnalyticsSnapshot, AnonUserId, ModerationVerdict, SessionRecord};
use reqwest::blocking::{Client, Response};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::run::{assumptions, plan, Mode, SimulationReport, Tally, TraceEntry};
use crate::scenario::Scenario;
use crate::SimError;

#[derive(Debug, Clone)]
pub struct HttpOptions {
    pub base_url: String,
    /// Divide every scheduled delay by this (2.0 runs twice as fast).
    pub time_scale: f64,
}

impl Default for HttpOptions {
    fn default() -> Self {
        HttpOptions {
            base_url: "http://127.0.0.1:8080".into(),
            time_scale: 1.0,
        }
    }
}

fn transport(e: reqwest::Error) -> SimError {
    if e.is_connect() || e.is_timeout() {
        SimError::Connection(e.to_string())
    } else {
        SimError::Protocol(e.to_string())
    }
}

fn checked(resp: Response) -> Result<Response, SimError> {
    let status = resp.status();
    if status.is_success() {
        Ok(resp)
    } else {
        let body = resp.text().unwrap_or_default();
        Err(SimError::Http { status: status.as_u16(), body })
    }
}

#[derive(Deserialize)]
struct Created {
    session_id: String,
    presenter_token: String,
}

#[derive(Deserialize)]
struct Joined {
    participant_token: String,
    user: AnonUserId,
}

#[derive(Deserialize)]
struct Submitted {
    verdict: ModerationVerdict,
}

pub fn run_http(scenario: &Scenario, seed: u64, opts: &HttpOptions) -> Result<SimulationReport, SimError> {
    scenario.validate().map_err(|e| SimError::Scenario(e.to_string()))?;
    if !(opts.time_scale > 0.0) {
        return Err(SimError::Scenario("time_scale must be > 0".into()));
    }
    let base = opts.base_url.trim_end_matches('/').to_string();
    let client = Client::builder()
        .connect_timeout(Duration::from_secs(5))
        .build()
        .map_err(transport)?;

    let created: Created = checked(client.post(format!("{base}/sessions")).json(&json!({})).send().map_err(transport)?)?
        .json()
        .map_err(transport)?;
    let id = created.session_id.clone();

    let active = scenario.active_count() as usize;
    let mut joined = Vec::with_capacity(active);
    for _ in 0..active {
        let j: Joined = checked(client.post(format!("{base}/sessions/{id}/join")).json(&json!({})).send().map_err(transport)?)?
            .json()
            .map_err(transport)?;
        joined.push(j);
    }

    // The stream replays history, so it doesn't matter if the first
    // submissions land before this connects.
    let stream_resp = checked(
        Client::builder()
            .connect_timeout(Duration::from_secs(5))
            .timeout(None)
            .build()
            .map_err(transport)?
            .get(format!("{base}/sessions/{id}/stream?role=presenter"))
            .bearer_auth(&created.presenter_token)
            .send()
            .map_err(transport)?,
    )?;
    let reader = thread::spawn(move || read_trace(stream_resp));

    let schedule = plan(scenario, seed);
    let tally = Arc::new(Mutex::new(Tally::default()));
    let start = Instant::now();
    let mut workers = Vec::new();
    for (student, j) in joined.iter().enumerate() {
        let mine: Vec<_> = schedule.iter().filter(|p| p.student == student).copied().collect();
        if mine.is_empty() {
            continue;
        }
        let client = client.clone();
        let url = format!("{base}/sessions/{id}/reactions");
        let token = j.participant_token.clone();
        let tally = tally.clone();
        let scale = opts.time_scale;
        workers.push(thread::spawn(move || -> Result<(), SimError> {
            for p in mine {
                let due = start + Duration::from_secs_f64(p.at_ms as f64 / 1000.0 / scale);
                if let Some(wait) = due.checked_duration_since(Instant::now()) {
                    thread::sleep(wait);
                }
                let body = json!({ "participant_token": token, "kind": p.kind, "client_time": p.at_ms });
                let out: Submitted = checked(client.post(&url).json(&body).send().map_err(transport)?)?
                    .json()
                    .map_err(transport)?;
                tally.lock().expect("tally lock").record(p.student, p.at_ms, &out.verdict);
            }
            Ok(())
        }));
    }
    for w in workers {
        w.join().map_err(|_| SimError::Protocol("student thread panicked".into()))??;
    }
    let end_due = start + Duration::from_secs_f64(scenario.duration_ms() as f64 / 1000.0 / opts.time_scale);
    if let Some(wait) = end_due.checked_duration_since(Instant::now()) {
        thread::sleep(wait);
    }

    let record: SessionRecord = checked(
        client
            .delete(format!("{base}/sessions/{id}"))
            .bearer_auth(&created.presenter_token)
            .send()
            .map_err(transport)?,
    )?
    .json()
    .map_err(transport)?;
    let analytics: AnalyticsSnapshot = checked(
        client
            .get(format!("{base}/sessions/{id}/analytics"))
            .bearer_auth(&created.presenter_token)
            .send()
            .map_err(transport)?,
    )?
    .json()
    .map_err(transport)?;
    let trace = reader.join().map_err(|_| SimError::Protocol("stream reader panicked".into()))??;

    let tally = Arc::try_unwrap(tally).ok().expect("workers joined").into_inner().expect("tally lock");
    let users: Vec<AnonUserId> = joined.into_iter().map(|j| j.user).collect();
    let (spammers, spammer_share) = tally.spammers(scenario, &users);
    let mut notes = assumptions(scenario);
    notes.push(format!("wall-clock run, schedule compressed by {}", opts.time_scale));

    Ok(SimulationReport {
        scenario: scenario.name.clone(),
        seed,
        mode: Mode::Http,
        clock: "wall".into(),
        assumptions: notes,
        enrollment: scenario.enrollment,
        active: active as u32,
        duration_ms: scenario.duration_ms(),
        submissions: tally.submissions,
        verdicts: tally.verdicts,
        accepted: tally.accepted,
        record_accepted: record.accepted_count() as u64,
        spammers,
        spammer_share,
        flagged_users: analytics.flags.clone(),
        analytics,
        stream_trace: trace,
    })
}

/// Reads SSE frames until the `end` event or EOF.
fn read_trace(resp: Response) -> Result<Vec<TraceEntry>, SimError> {
    let mut trace = Vec::new();
    let (mut id, mut event, mut data) = (None::<u64>, String::new(), String::new());
    for line in BufReader::new(resp).lines() {
        let line = line.map_err(|e| SimError::Protocol(format!("stream read: {e}")))?;
        if line.is_empty() {
            if event == "end" {
                break;
            }
            if event == "aggregated" {
                let v: Value = serde_json::from_str(&data).map_err(|e| SimError::Protocol(e.to_string()))?;
                trace.push(TraceEntry {
                    seq: id.unwrap_or(0),
                    at: v["emitted_at"].as_u64().unwrap_or(0),
                    kind: serde_json::from_value(v["kind"].clone()).map_err(|e| SimError::Protocol(e.to_string()))?,
                    count: v["count"].as_u64().unwrap_or(0) as u32,
                    play_haptic: v["play_haptic"].as_bool().unwrap_or(false),
                });
            }
            id = None;
            event.clear();
            data.clear();
        } else if let Some(v) = line.strip_prefix("id:") {
            id = v.trim().parse().ok();
        } else if let Some(v) = line.strip_prefix("event:") {
            event = v.trim().to_string();
        } else if let Some(v) = line.strip_prefix("data:") {
            data.push_str(v.trim_start());
        }
    }
    Ok(trace)
}
