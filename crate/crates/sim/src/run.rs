//! In-process discrete-event run against a `SessionService` on a virtual clock.

use std::collections::BTreeMap;
use std::sync::Arc;

use nudge_core::session::stream::TryNext;
use nudge_core::{
    AnalyticsSnapshot, AnonUserId, ManualClock, MemoryStore, ModerationVerdict, ReactionType, RecordStore,
    ServiceConfig, SessionService, StreamPayload, StreamRole, Timestamp,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, StudentProfile};
use crate::SimError;

/// One planned submission, relative to session start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Planned {
    pub at_ms: u64,
    pub student: usize,
    pub kind: ReactionType,
}

/// Every submission of every active student, in (time, student) order.
/// Lurkers contribute nothing.
pub fn plan(scenario: &Scenario, seed: u64) -> Vec<Planned> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration = scenario.duration_ms();
    let prompts = scenario.script.expand(duration);
    let mut out = Vec::new();
    for (student, profile) in scenario.profiles().iter().enumerate() {
        match profile {
            StudentProfile::Lurker => {}
            StudentProfile::Spammer(p) => {
                let mut t = p.start_ms;
                let mut i = 0;
                while t < duration {
                    out.push(Planned { at_ms: t, student, kind: p.types[i % p.types.len()] });
                    t += p.period_ms;
                    i += 1;
                }
            }
            StudentProfile::Engaged(p) => {
                let latency = LogNormal::new(p.latency_median_ms.ln(), p.latency_sigma).expect("validated sigma");
                for prompt in &prompts {
                    // Draw both numbers every time so one student's choices
                    // don't shift the others' random streams.
                    let reacts = rng.gen_bool(p.react_prob);
                    let delay: f64 = latency.sample(&mut rng);
                    if !reacts {
                        continue;
                    }
                    let at_ms = prompt.at_ms + delay.round() as u64;
                    if at_ms < duration {
                        out.push(Planned { at_ms, student, kind: prompt.event.reaction() });
                    }
                }
            }
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Inprocess,
    Http,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inprocess" | "in-process" => Ok(Mode::Inprocess),
            "http" => Ok(Mode::Http),
            other => Err(format!("unknown mode {other:?} (inprocess|http)")),
        }
    }
}

/// Presenter-stream event as the simulator saw it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub seq: u64,
    pub at: Timestamp,
    pub kind: ReactionType,
    pub count: u32,
    pub play_haptic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpammerOutcome {
    pub user: AnonUserId,
    pub submissions: u64,
    pub accepted: u64,
    pub warned: bool,
    pub banned: bool,
    /// Session-relative time of the first banned rejection.
    pub banned_at_ms: Option<u64>,
    /// Accepted reactions before the ban took effect.
    pub accepted_before_ban: Option<u64>,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: String,
    pub seed: u64,
    pub mode: Mode,
    /// "virtual" for in-process runs, "wall" over HTTP.
    pub clock: String,
    pub assumptions: Vec<String>,
    pub enrollment: u32,
    pub active: u32,
    pub duration_ms: u64,
    pub submissions: u64,
    pub verdicts: BTreeMap<String, u64>,
    pub accepted: u64,
    /// Accepted count according to the persisted session record.
    pub record_accepted: u64,
    pub spammers: Vec<SpammerOutcome>,
    pub spammer_share: f64,
    pub flagged_users: Vec<AnonUserId>,
    pub analytics: AnalyticsSnapshot,
    pub stream_trace: Vec<TraceEntry>,
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn verdict_count(&self, name: &str) -> u64 {
        self.verdicts.get(name).copied().unwrap_or(0)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} seed={} mode={:?} active={}/{} submissions={} accepted={} record_accepted={}",
            self.scenario,
            self.seed,
            self.mode,
            self.active,
            self.enrollment,
            self.submissions,
            self.accepted,
            self.record_accepted
        );
        for (k, v) in &self.verdicts {
            s.push_str(&format!(" {k}={v}"));
        }
        for sp in &self.spammers {
            s.push_str(&format!(
                "\n  spammer {} accepted={} share={:.3} warned={} banned={}",
                sp.user, sp.accepted, sp.share, sp.warned, sp.banned
            ));
        }
        s.push_str(&format!("\n  flagged: {:?}", self.flagged_users.iter().map(|u| u.0.as_str()).collect::<Vec<_>>()));
        s
    }
}

pub(crate) fn assumptions(scenario: &Scenario) -> Vec<String> {
    let e = &scenario.engaged;
    vec![
        format!(
            "active students = round({} * {}) = {}; the rest never join",
            scenario.enrollment,
            scenario.active_fraction,
            scenario.active_count()
        ),
        format!(
            "engaged students react to each prompt with p = {} after a lognormal delay (median {} ms, sigma {})",
            e.react_prob, e.latency_median_ms, e.latency_sigma
        ),
        "spammers submit on a fixed period, cycling their reaction types".to_string(),
    ]
}

/// Tallies shared by both backends.
#[derive(Default)]
pub(crate) struct Tally {
    pub submissions: u64,
    pub accepted: u64,
    pub verdicts: BTreeMap<String, u64>,
    pub per_student: BTreeMap<usize, StudentTally>,
}

#[derive(Default, Clone)]
pub(crate) struct StudentTally {
    pub submissions: u64,
    pub accepted: u64,
    pub warned: bool,
    pub banned_at_ms: Option<u64>,
    pub accepted_before_ban: Option<u64>,
}

impl Tally {
    pub fn record(&mut self, student: usize, at_ms: u64, verdict: &ModerationVerdict) {
        self.submissions += 1;
        *self.verdicts.entry(verdict.name().to_string()).or_default() += 1;
        let t = self.per_student.entry(student).or_default();
        t.submissions += 1;
        if verdict.is_accepted() {
            self.accepted += 1;
            t.accepted += 1;
        }
        match verdict {
            ModerationVerdict::AcceptWithWarning => t.warned = true,
            ModerationVerdict::RejectBanned if t.banned_at_ms.is_none() => {
                t.banned_at_ms = Some(at_ms);
                t.accepted_before_ban = Some(t.accepted);
            }
            _ => {}
        }
    }

    pub fn spammers(&self, scenario: &Scenario, users: &[AnonUserId]) -> (Vec<SpammerOutcome>, f64) {
        let mut outcomes = Vec::new();
        let mut spam_accepted = 0;
        for i in 0..scenario.spammers.len() {
            let t = self.per_student.get(&i).cloned().unwrap_or_default();
            spam_accepted += t.accepted;
            outcomes.push(SpammerOutcome {
                user: users[i].clone(),
                submissions: t.submissions,
                accepted: t.accepted,
                warned: t.warned,
                banned: t.banned_at_ms.is_some(),
                banned_at_ms: t.banned_at_ms,
                accepted_before_ban: t.accepted_before_ban,
                share: share(t.accepted, self.accepted),
            });
        }
        (outcomes, share(spam_accepted, self.accepted))
    }
}

fn share(part: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

/// Session start on the virtual clock.
pub const VIRTUAL_EPOCH_MS: Timestamp = 0;

pub fn run_inprocess(scenario: &Scenario, seed: u64) -> Result<SimulationReport, SimError> {
    run_inprocess_with_store(scenario, seed, Arc::new(MemoryStore::new()))
}

pub fn run_inprocess_with_store(
    scenario: &Scenario,
    seed: u64,
    store: Arc<dyn RecordStore>,
) -> Result<SimulationReport, SimError> {
    scenario.validate().map_err(|e| SimError::Scenario(e.to_string()))?;
    let clock = Arc::new(ManualClock::new(VIRTUAL_EPOCH_MS));
    let mut config = ServiceConfig {
        moderation: scenario.moderation.clone(),
        ..ServiceConfig::default()
    };
    if let Some(w) = scenario.window_len_ms {
        config.window_len_ms = w;
    }
    let service = SessionService::new(config, clock.clone(), store, seed)?;
    let created = service.create_session()?;
    let id = created.session_id.as_str();

    let active = scenario.active_count() as usize;
    let mut tokens = Vec::with_capacity(active);
    let mut users = Vec::with_capacity(active);
    for _ in 0..active {
        let joined = service.join_session(id)?;
        tokens.push(joined.participant_token);
        users.push(joined.user);
    }

    let mut stream = service.subscribe(id, StreamRole::Presenter, &created.presenter_token, 0)?;
    let mut trace = Vec::new();
    let mut tally = Tally::default();
    for p in plan(scenario, seed) {
        clock.set(VIRTUAL_EPOCH_MS + p.at_ms);
        let out = service.submit_reaction(id, &tokens[p.student], p.kind, Some(p.at_ms))?;
        tally.record(p.student, p.at_ms, &out.verdict);
        drain(&mut stream, &mut trace);
    }

    clock.set(VIRTUAL_EPOCH_MS + scenario.duration_ms());
    let record = service.end_session(id, &created.presenter_token)?;
    drain(&mut stream, &mut trace);
    let analytics = record.analytics();
    let (spammers, spammer_share) = tally.spammers(scenario, &users);

    Ok(SimulationReport {
        scenario: scenario.name.clone(),
        seed,
        mode: Mode::Inprocess,
        clock: "virtual".into(),
        assumptions: assumptions(scenario),
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

fn drain(stream: &mut nudge_core::Subscription, trace: &mut Vec<TraceEntry>) {
    while let TryNext::Event(e) = stream.try_next() {
        if let StreamPayload::Aggregated(a) = e.payload {
            trace.push(TraceEntry {
                seq: e.seq,
                at: a.emitted_at,
                kind: a.kind,
                count: a.count,
                play_haptic: a.play_haptic,
            });
        }
    }
}
