//! Arrival-anchored tumbling windows over same-type reactions.
//!
//! The first reaction of a type opens a window of `window_len_ms` and is
//! emitted immediately with the haptic attached. Later reactions of that type
//! inside the window only bump the count. Windows are half-open:
//! `opened_at <= t < opened_at + window_len_ms`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::AggregationError;
use crate::haptics::{haptic_sequence_for, HapticSequence};
use crate::model::{Reaction, ReactionType, SessionId, Timestamp};

pub const DEFAULT_WINDOW_LEN_MS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationWindow {
    pub session: SessionId,
    pub kind: ReactionType,
    pub opened_at: Timestamp,
    pub count: u32,
}

impl AggregationWindow {
    pub fn closes_at(&self, window_len_ms: u64) -> Timestamp {
        self.opened_at + window_len_ms
    }

    pub fn is_live(&self, t: Timestamp, window_len_ms: u64) -> bool {
        self.opened_at <= t && t < self.closes_at(window_len_ms)
    }
}

/// What the presenter sees for each accepted reaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedEvent {
    pub session: SessionId,
    pub kind: ReactionType,
    pub count: u32,
    pub window_opened_at: Timestamp,
    pub emitted_at: Timestamp,
    pub play_haptic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub haptic: Option<HapticSequence>,
}

/// Window state for a single session.
#[derive(Debug, Clone)]
pub struct AggregationEngine {
    session: SessionId,
    window_len_ms: u64,
    live: BTreeMap<ReactionType, AggregationWindow>,
    closed: Vec<AggregationWindow>,
}

impl AggregationEngine {
    pub fn new(session: SessionId, window_len_ms: u64) -> Self {
        assert!(window_len_ms > 0, "window length must be positive");
        AggregationEngine {
            session,
            window_len_ms,
            live: BTreeMap::new(),
            closed: Vec::new(),
        }
    }

    pub fn session(&self) -> &SessionId {
        &self.session
    }

    pub fn window_len_ms(&self) -> u64 {
        self.window_len_ms
    }

    pub fn ingest(&mut self, reaction: &Reaction, now: Timestamp) -> AggregatedEvent {
        debug_assert_eq!(reaction.session, self.session);
        let kind = reaction.kind;
        let len = self.window_len_ms;

        if let Some(w) = self.live.get_mut(&kind) {
            if w.is_live(now, len) {
                w.count += 1;
                return AggregatedEvent {
                    session: self.session.clone(),
                    kind,
                    count: w.count,
                    window_opened_at: w.opened_at,
                    emitted_at: now,
                    play_haptic: false,
                    haptic: None,
                };
            }
        }
        if let Some(expired) = self.live.remove(&kind) {
            self.closed.push(expired);
        }
        self.live.insert(
            kind,
            AggregationWindow {
                session: self.session.clone(),
                kind,
                opened_at: now,
                count: 1,
            },
        );
        AggregatedEvent {
            session: self.session.clone(),
            kind,
            count: 1,
            window_opened_at: now,
            emitted_at: now,
            play_haptic: true,
            haptic: Some(haptic_sequence_for(kind)),
        }
    }

    /// Close every window with `opened_at + window_len <= now`.
    pub fn expire_windows(&mut self, now: Timestamp) -> Vec<AggregationWindow> {
        let len = self.window_len_ms;
        let expired: Vec<ReactionType> = self
            .live
            .iter()
            .filter(|(_, w)| w.closes_at(len) <= now)
            .map(|(k, _)| *k)
            .collect();
        let mut out = Vec::with_capacity(expired.len());
        for kind in expired {
            if let Some(w) = self.live.remove(&kind) {
                self.closed.push(w.clone());
                out.push(w);
            }
        }
        out
    }

    /// Close everything regardless of age. Used when the session ends.
    pub fn close_all(&mut self) -> Vec<AggregationWindow> {
        let out: Vec<_> = std::mem::take(&mut self.live).into_values().collect();
        self.closed.extend(out.iter().cloned());
        out
    }

    pub fn live_windows(&self) -> impl Iterator<Item = &AggregationWindow> {
        self.live.values()
    }

    pub fn closed_windows(&self) -> &[AggregationWindow] {
        &self.closed
    }

    /// Closed windows followed by live ones, in order of opening.
    pub fn all_windows(&self) -> Vec<AggregationWindow> {
        let mut all: Vec<_> = self.closed.iter().chain(self.live.values()).cloned().collect();
        all.sort_by_key(|w| (w.opened_at, w.kind));
        all
    }
}

/// Multi-session front for [`AggregationEngine`].
#[derive(Debug, Default)]
pub struct Aggregator {
    window_len_ms: u64,
    sessions: HashMap<SessionId, AggregationEngine>,
}

impl Aggregator {
    pub fn new(window_len_ms: u64) -> Self {
        Aggregator {
            window_len_ms,
            sessions: HashMap::new(),
        }
    }

    pub fn open_session(&mut self, session: SessionId) {
        let len = self.window_len_ms;
        self.sessions
            .entry(session.clone())
            .or_insert_with(|| AggregationEngine::new(session, len));
    }

    pub fn close_session(&mut self, session: &SessionId) -> Option<AggregationEngine> {
        self.sessions.remove(session)
    }

    pub fn engine(&self, session: &SessionId) -> Option<&AggregationEngine> {
        self.sessions.get(session)
    }

    pub fn ingest(
        &mut self,
        reaction: &Reaction,
        now: Timestamp,
    ) -> Result<AggregatedEvent, AggregationError> {
        self.sessions
            .get_mut(&reaction.session)
            .map(|engine| engine.ingest(reaction, now))
            .ok_or_else(|| AggregationError::SessionNotFound(reaction.session.clone()))
    }

    pub fn expire_windows(&mut self, session: &SessionId, now: Timestamp) -> Vec<AggregationWindow> {
        self.sessions
            .get_mut(session)
            .map(|e| e.expire_windows(now))
            .unwrap_or_default()
    }
}
