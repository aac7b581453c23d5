//! Session lifecycle and the per-session pipeline:
//! moderation, then aggregation, then fan-out to the presenter and researcher
//! feeds. Operations on one session are serialized behind its lock; distinct
//! sessions run independently.

pub mod clock;
pub mod record;
pub mod stream;

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::{AggregatedEvent, AggregationEngine, DEFAULT_WINDOW_LEN_MS};
use crate::analytics::{AnalyticsConfig, AnalyticsSnapshot};
use crate::error::ServiceError;
use crate::model::{
    random_token, AnonUserId, ParticipantToken, PresenterToken, Reaction, ReactionType, SessionId,
    Timestamp,
};
use crate::moderation::{self, ModerationConfig, ModerationVerdict, UserModerationState};

use clock::Clock;
use record::{LogEntry, ModerationAction, ModerationEvent, RecordStore, SessionMeta, SessionRecord};
use stream::{ReactionNotice, StreamHub, StreamPayload, StreamRole, Subscription, DEFAULT_STREAM_BUFFER};

pub const SESSION_ID_ATTEMPTS: usize = 16;

/// Optional brake on join attempts per session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinThrottle {
    pub max_joins: u32,
    pub per_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub window_len_ms: u64,
    pub moderation: ModerationConfig,
    pub analytics: AnalyticsConfig,
    pub stream_buffer: usize,
    pub join_throttle: Option<JoinThrottle>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            window_len_ms: DEFAULT_WINDOW_LEN_MS,
            moderation: ModerationConfig::default(),
            analytics: AnalyticsConfig::default(),
            stream_buffer: DEFAULT_STREAM_BUFFER,
            join_throttle: None,
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.window_len_ms == 0 {
            return Err(ServiceError::InvalidArgument("window_len_ms must be > 0".into()));
        }
        self.moderation.validate().map_err(ServiceError::InvalidArgument)?;
        let t = self.analytics.dominance_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(ServiceError::InvalidArgument(format!(
                "dominance_threshold {t} outside (0, 1]"
            )));
        }
        if self.analytics.bin_width_ms == 0 {
            return Err(ServiceError::InvalidArgument("bin_width_ms must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Ended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: SessionId,
    pub presenter_token: PresenterToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinedSession {
    pub participant_token: ParticipantToken,
    /// Public pseudonym shown in analytics; never tied to transport identity.
    pub user: AnonUserId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub verdict: ModerationVerdict,
    pub cooldown_remaining_ms: u64,
    pub count_in_window: Option<u32>,
    #[serde(skip)]
    pub event: Option<AggregatedEvent>,
}

struct Participant {
    user: AnonUserId,
    moderation: UserModerationState,
}

struct Session {
    id: SessionId,
    created_at: Timestamp,
    status: SessionStatus,
    presenter_token: PresenterToken,
    participants: HashMap<ParticipantToken, Participant>,
    pseudonyms: std::collections::HashSet<AnonUserId>,
    aggregation: AggregationEngine,
    log: Vec<LogEntry>,
    accepted: Vec<Reaction>,
    moderation_events: Vec<ModerationEvent>,
    presenter: StreamHub,
    researcher: StreamHub,
    recent_joins: VecDeque<Timestamp>,
    record: Option<SessionRecord>,
}

impl Session {
    fn hub(&mut self, role: StreamRole) -> &mut StreamHub {
        match role {
            StreamRole::Presenter => &mut self.presenter,
            StreamRole::Researcher => &mut self.researcher,
        }
    }

    fn authorize(&self, token: &PresenterToken) -> Result<(), ServiceError> {
        if constant_time_eq(token.0.as_bytes(), self.presenter_token.0.as_bytes()) {
            Ok(())
        } else {
            Err(ServiceError::Unauthorized)
        }
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// Pick an ID not rejected by `is_taken`, giving up after `attempts` draws.
pub fn allocate_session_id<R: Rng + ?Sized>(
    rng: &mut R,
    attempts: usize,
    is_taken: impl Fn(&SessionId) -> bool,
) -> Result<SessionId, ServiceError> {
    for _ in 0..attempts {
        let id = SessionId::generate(rng);
        if !is_taken(&id) {
            return Ok(id);
        }
    }
    Err(ServiceError::Unavailable(attempts))
}

pub struct SessionService {
    config: ServiceConfig,
    clock: Arc<dyn Clock>,
    store: Arc<dyn RecordStore>,
    sessions: RwLock<HashMap<SessionId, Arc<Mutex<Session>>>>,
    rng: Mutex<ChaCha20Rng>,
}

impl SessionService {
    pub fn new(
        config: ServiceConfig,
        clock: Arc<dyn Clock>,
        store: Arc<dyn RecordStore>,
        seed: u64,
    ) -> Result<Self, ServiceError> {
        config.validate()?;
        Ok(SessionService {
            config,
            clock,
            store,
            sessions: RwLock::new(HashMap::new()),
            rng: Mutex::new(ChaCha20Rng::seed_from_u64(seed)),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now_ms()
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        let parsed = SessionId::parse(id).map_err(|_| ServiceError::SessionNotFound(id.to_string()))?;
        self.sessions
            .read()
            .get(&parsed)
            .cloned()
            .ok_or_else(|| ServiceError::SessionNotFound(id.to_string()))
    }

    pub fn create_session(&self) -> Result<CreatedSession, ServiceError> {
        let now = self.now();
        let mut sessions = self.sessions.write();
        let mut rng = self.rng.lock();
        let id = allocate_session_id(&mut *rng, SESSION_ID_ATTEMPTS, |id| sessions.contains_key(id))?;
        let presenter_token = PresenterToken(random_token(&mut *rng, 16));
        let buffer = self.config.stream_buffer;
        let session = Session {
            id: id.clone(),
            created_at: now,
            status: SessionStatus::Active,
            presenter_token: presenter_token.clone(),
            participants: HashMap::new(),
            pseudonyms: Default::default(),
            aggregation: AggregationEngine::new(id.clone(), self.config.window_len_ms),
            log: Vec::new(),
            accepted: Vec::new(),
            moderation_events: Vec::new(),
            presenter: StreamHub::new(buffer),
            researcher: StreamHub::new(buffer),
            recent_joins: VecDeque::new(),
            record: None,
        };
        sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(CreatedSession {
            session_id: id,
            presenter_token,
        })
    }

    pub fn status(&self, id: &str) -> Result<SessionStatus, ServiceError> {
        Ok(self.session(id)?.lock().status)
    }

    pub fn participant_count(&self, id: &str) -> Result<usize, ServiceError> {
        Ok(self.session(id)?.lock().participants.len())
    }

    pub fn join_session(&self, id: &str) -> Result<JoinedSession, ServiceError> {
        let handle = self.session(id)?;
        let now = self.now();
        let mut s = handle.lock();
        if s.status == SessionStatus::Ended {
            return Err(ServiceError::SessionEnded(s.id.clone()));
        }
        if let Some(throttle) = self.config.join_throttle {
            while let Some(&front) = s.recent_joins.front() {
                if now.saturating_sub(front) >= throttle.per_ms {
                    s.recent_joins.pop_front();
                } else {
                    break;
                }
            }
            if s.recent_joins.len() as u64 >= u64::from(throttle.max_joins) {
                return Err(ServiceError::JoinThrottled(s.id.clone()));
            }
            s.recent_joins.push_back(now);
        }

        let mut rng = self.rng.lock();
        let token = loop {
            let t = ParticipantToken(random_token(&mut *rng, 16));
            if !s.participants.contains_key(&t) {
                break t;
            }
        };
        let user = loop {
            let u = AnonUserId(format!("anon-{}", random_token(&mut *rng, 4)));
            if !s.pseudonyms.contains(&u) {
                break u;
            }
        };
        s.pseudonyms.insert(user.clone());
        s.participants.insert(
            token.clone(),
            Participant {
                user: user.clone(),
                moderation: UserModerationState::new(),
            },
        );
        Ok(JoinedSession {
            participant_token: token,
            user,
        })
    }

    pub fn submit_reaction(
        &self,
        id: &str,
        token: &ParticipantToken,
        kind: ReactionType,
        client_time: Option<Timestamp>,
    ) -> Result<SubmitOutcome, ServiceError> {
        let handle = self.session(id)?;
        let mut guard = handle.lock();
        let s = &mut *guard;
        if s.status == SessionStatus::Ended {
            return Err(ServiceError::SessionEnded(s.id.clone()));
        }
        let now = self.clock.now_ms();
        let cfg = &self.config.moderation;
        let participant = s.participants.get_mut(token).ok_or(ServiceError::Unauthorized)?;
        let user = participant.user.clone();
        let (was_warned, was_banned) = (participant.moderation.warned, participant.moderation.banned);
        let verdict = moderation::assess(&mut participant.moderation, kind, now, cfg);
        let cooldown_remaining_ms = moderation::cooldown_remaining(&participant.moderation, kind, now, cfg);
        let (warned, banned) = (participant.moderation.warned, participant.moderation.banned);

        s.log.push(LogEntry {
            seq: s.log.len() as u64,
            user: user.clone(),
            kind,
            at: now,
            client_time,
            verdict,
        });
        if warned && !was_warned {
            self.moderation_event(s, &user, now, ModerationAction::Warned);
        }
        if banned && !was_banned {
            self.moderation_event(s, &user, now, ModerationAction::Banned);
        }

        if !verdict.is_accepted() {
            return Ok(SubmitOutcome {
                verdict,
                cooldown_remaining_ms,
                count_in_window: None,
                event: None,
            });
        }

        let reaction = Reaction {
            session: s.id.clone(),
            user: user.clone(),
            kind,
            at: now,
        };
        s.aggregation.expire_windows(now);
        let event = s.aggregation.ingest(&reaction, now);
        s.accepted.push(reaction);
        s.presenter.publish(StreamPayload::Aggregated(event.clone()));
        s.researcher.publish(StreamPayload::Reaction(ReactionNotice {
            user,
            kind,
            at: now,
            verdict,
        }));
        s.researcher.publish(StreamPayload::Aggregated(event.clone()));
        Ok(SubmitOutcome {
            verdict,
            cooldown_remaining_ms,
            count_in_window: Some(event.count),
            event: Some(event),
        })
    }

    fn moderation_event(&self, s: &mut Session, user: &AnonUserId, at: Timestamp, action: ModerationAction) {
        let event = ModerationEvent {
            user: user.clone(),
            at,
            action,
        };
        s.moderation_events.push(event.clone());
        s.researcher.publish(StreamPayload::Moderation(event));
    }

    /// Feed of one role, resuming after `last_seq` (0 for everything).
    pub fn subscribe(
        &self,
        id: &str,
        role: StreamRole,
        token: &PresenterToken,
        last_seq: u64,
    ) -> Result<Subscription, ServiceError> {
        let handle = self.session(id)?;
        let mut s = handle.lock();
        s.authorize(token)?;
        Ok(s.hub(role).subscribe(last_seq))
    }

    pub fn analytics(&self, id: &str, token: &PresenterToken) -> Result<AnalyticsSnapshot, ServiceError> {
        let handle = self.session(id)?;
        let s = handle.lock();
        s.authorize(token)?;
        if let Some(record) = &s.record {
            return Ok(record.analytics());
        }
        Ok(AnalyticsSnapshot::compute(&s.accepted, self.now(), &self.config.analytics))
    }

    /// Ends the session, persists and returns its record. Ending twice returns
    /// the stored record again.
    pub fn end_session(&self, id: &str, token: &PresenterToken) -> Result<SessionRecord, ServiceError> {
        let handle = self.session(id)?;
        let mut guard = handle.lock();
        let s = &mut *guard;
        s.authorize(token)?;
        if let Some(record) = &s.record {
            return Ok(record.clone());
        }
        let now = self.now().max(s.created_at);
        s.aggregation.close_all();
        let record = SessionRecord {
            meta: SessionMeta {
                session_id: s.id.clone(),
                created_at: s.created_at,
                ended_at: now,
                window_len_ms: s.aggregation.window_len_ms(),
                moderation: self.config.moderation.clone(),
                analytics: self.config.analytics.clone(),
                participants: s.participants.len() as u32,
            },
            entries: s.log.clone(),
            windows: s.aggregation.all_windows(),
            moderation_events: s.moderation_events.clone(),
        };
        self.store.save(&record)?;
        s.status = SessionStatus::Ended;
        s.presenter.close(now);
        s.researcher.close(now);
        s.record = Some(record.clone());
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::clock::ManualClock;
    use crate::session::record::MemoryStore;
    use crate::session::stream::TryNext;
    use rand_chacha::ChaCha8Rng;

    fn service() -> (SessionService, Arc<ManualClock>) {
        let clock = Arc::new(ManualClock::new(0));
        let svc = SessionService::new(ServiceConfig::default(), clock.clone(), Arc::new(MemoryStore::new()), 1)
            .unwrap();
        (svc, clock)
    }

    #[test]
    fn create_join_submit_end() {
        let (svc, clock) = service();
        let created = svc.create_session().unwrap();
        let id = created.session_id.as_str();
        assert_eq!(svc.status(id).unwrap(), SessionStatus::Active);

        let p = svc.join_session(id).unwrap();
        assert_eq!(svc.participant_count(id).unwrap(), 1);
        let mut sub = svc
            .subscribe(id, StreamRole::Presenter, &created.presenter_token, 0)
            .unwrap();

        let out = svc.submit_reaction(id, &p.participant_token, ReactionType::Confused, None).unwrap();
        assert_eq!(out.verdict, ModerationVerdict::Accept);
        assert_eq!(out.count_in_window, Some(1));
        assert_eq!(out.cooldown_remaining_ms, 20_000);
        match sub.try_next() {
            TryNext::Event(e) => match e.payload {
                StreamPayload::Aggregated(a) => assert!(a.play_haptic && a.count == 1),
                other => panic!("unexpected {other:?}"),
            },
            other => panic!("unexpected {other:?}"),
        }

        clock.set(5_000);
        let out = svc.submit_reaction(id, &p.participant_token, ReactionType::Confused, None).unwrap();
        assert_eq!(out.verdict, ModerationVerdict::RejectCooldown { remaining_ms: 15_000 });
        assert_eq!(sub.try_next(), TryNext::Empty);

        let rec = svc.end_session(id, &created.presenter_token).unwrap();
        assert_eq!(rec.entries.len(), 2);
        assert_eq!(rec.accepted_count(), 1);
        assert!(matches!(
            svc.submit_reaction(id, &p.participant_token, ReactionType::Confident, None),
            Err(ServiceError::SessionEnded(_))
        ));
        assert!(matches!(svc.join_session(id), Err(ServiceError::SessionEnded(_))));
        assert_eq!(svc.end_session(id, &created.presenter_token).unwrap(), rec);
    }

    #[test]
    fn errors() {
        let (svc, _) = service();
        assert!(matches!(svc.join_session("ZZZZZZ"), Err(ServiceError::SessionNotFound(_))));
        assert!(matches!(svc.join_session("nope"), Err(ServiceError::SessionNotFound(_))));
        let c = svc.create_session().unwrap();
        let id = c.session_id.as_str();
        assert!(matches!(
            svc.submit_reaction(id, &ParticipantToken("forged".into()), ReactionType::Confused, None),
            Err(ServiceError::Unauthorized)
        ));
        let bad = PresenterToken("x".into());
        assert!(matches!(svc.subscribe(id, StreamRole::Presenter, &bad, 0), Err(ServiceError::Unauthorized)));
        assert!(matches!(svc.end_session(id, &bad), Err(ServiceError::Unauthorized)));
        assert!(matches!(svc.analytics(id, &bad), Err(ServiceError::Unauthorized)));
    }

    #[test]
    fn distinct_ids_and_tokens() {
        let (svc, _) = service();
        let a = svc.create_session().unwrap();
        let b = svc.create_session().unwrap();
        assert_ne!(a.session_id, b.session_id);
        let id = a.session_id.as_str();
        let tokens: std::collections::HashSet<_> =
            (0..200).map(|_| svc.join_session(id).unwrap().participant_token).collect();
        assert_eq!(tokens.len(), 200);
        assert_eq!(svc.participant_count(id).unwrap(), 200);
    }

    #[test]
    fn id_allocation_gives_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            allocate_session_id(&mut rng, SESSION_ID_ATTEMPTS, |_| true),
            Err(ServiceError::Unavailable(16))
        ));
        let first = SessionId::generate(&mut ChaCha8Rng::seed_from_u64(3));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let got = allocate_session_id(&mut rng, SESSION_ID_ATTEMPTS, |id| *id == first).unwrap();
        assert_ne!(got, first);
    }

    #[test]
    fn join_throttle() {
        let clock = Arc::new(ManualClock::new(0));
        let cfg = ServiceConfig {
            join_throttle: Some(JoinThrottle { max_joins: 2, per_ms: 1_000 }),
            ..ServiceConfig::default()
        };
        let svc = SessionService::new(cfg, clock.clone(), Arc::new(MemoryStore::new()), 1).unwrap();
        let id = svc.create_session().unwrap().session_id;
        svc.join_session(id.as_str()).unwrap();
        svc.join_session(id.as_str()).unwrap();
        assert!(matches!(svc.join_session(id.as_str()), Err(ServiceError::JoinThrottled(_))));
        clock.set(1_000);
        svc.join_session(id.as_str()).unwrap();
    }

    #[test]
    fn ban_emits_moderation_events() {
        let (svc, clock) = service();
        let c = svc.create_session().unwrap();
        let id = c.session_id.as_str();
        let p = svc.join_session(id).unwrap();
        let mut verdicts = Vec::new();
        for i in 0..6u64 {
            clock.set(i * 20_000);
            let kind = ReactionType::ALL[(i % 3) as usize];
            verdicts.push(svc.submit_reaction(id, &p.participant_token, kind, None).unwrap().verdict);
        }
        assert_eq!(verdicts[4], ModerationVerdict::AcceptWithWarning);
        assert_eq!(verdicts[5], ModerationVerdict::RejectBanned);
        let rec = svc.end_session(id, &c.presenter_token).unwrap();
        let actions: Vec<_> = rec.moderation_events.iter().map(|m| m.action).collect();
        assert_eq!(actions, [ModerationAction::Warned, ModerationAction::Banned]);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = ServiceConfig {
            window_len_ms: 0,
            ..ServiceConfig::default()
        };
        assert!(SessionService::new(cfg, Arc::new(ManualClock::new(0)), Arc::new(MemoryStore::new()), 0).is_err());
    }
}
