//! Per-user cooldowns, rolling rate limiting and warn-then-ban escalation.
//!
//! All time is passed in by the caller; nothing here reads a clock.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::model::{ReactionType, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Escalation {
    Off,
    #[default]
    WarnThenBan,
}

impl FromStr for Escalation {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "off" | "none" => Ok(Escalation::Off),
            "warn_then_ban" | "warnthenban" => Ok(Escalation::WarnThenBan),
            _ => Err(ParseError::Escalation(s.to_string())),
        }
    }
}

impl fmt::Display for Escalation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Escalation::Off => "off",
            Escalation::WarnThenBan => "warn_then_ban",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModerationConfig {
    pub cooldown_ms: u64,
    /// Acceptances allowed inside any rolling `rate_window_ms`.
    pub rate_limit: u32,
    pub rate_window_ms: u64,
    pub session_cap: Option<u32>,
    pub escalation: Escalation,
}

impl Default for ModerationConfig {
    fn default() -> Self {
        ModerationConfig {
            cooldown_ms: 20_000,
            rate_limit: 4,
            rate_window_ms: 300_000,
            session_cap: None,
            escalation: Escalation::WarnThenBan,
        }
    }
}

impl ModerationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.cooldown_ms == 0 {
            return Err("cooldown_ms must be > 0".into());
        }
        if self.rate_limit == 0 {
            return Err("rate_limit must be >= 1".into());
        }
        if self.rate_window_ms == 0 {
            return Err("rate_window_ms must be > 0".into());
        }
        if self.session_cap == Some(0) {
            return Err("session_cap must be >= 1 when set".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModerationVerdict {
    Accept,
    RejectCooldown { remaining_ms: u64 },
    AcceptWithWarning,
    RejectBanned,
    RejectCapReached,
}

impl ModerationVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, ModerationVerdict::Accept | ModerationVerdict::AcceptWithWarning)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModerationVerdict::Accept => "accept",
            ModerationVerdict::RejectCooldown { .. } => "reject_cooldown",
            ModerationVerdict::AcceptWithWarning => "accept_with_warning",
            ModerationVerdict::RejectBanned => "reject_banned",
            ModerationVerdict::RejectCapReached => "reject_cap_reached",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserModerationState {
    /// Indexed by [`ReactionType::index`].
    last_accepted: [Option<Timestamp>; 3],
    recent: VecDeque<Timestamp>,
    pub warned: bool,
    pub banned: bool,
    pub total_accepted: u32,
}

impl UserModerationState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_accepted(&self, kind: ReactionType) -> Option<Timestamp> {
        self.last_accepted[kind.index()]
    }

    /// Accepted timestamps inside the rolling window as of the last prune.
    pub fn recent(&self) -> &VecDeque<Timestamp> {
        &self.recent
    }

    fn prune(&mut self, now: Timestamp, window_ms: u64) {
        while let Some(&front) = self.recent.front() {
            if now.saturating_sub(front) >= window_ms {
                self.recent.pop_front();
            } else {
                break;
            }
        }
    }

    fn record_acceptance(&mut self, kind: ReactionType, now: Timestamp) {
        self.last_accepted[kind.index()] = Some(now);
        self.recent.push_back(now);
        self.total_accepted += 1;
    }
}

/// Milliseconds until `kind` may be accepted again for this user.
pub fn cooldown_remaining(
    state: &UserModerationState,
    kind: ReactionType,
    now: Timestamp,
    cfg: &ModerationConfig,
) -> u64 {
    match state.last_accepted(kind) {
        None => 0,
        Some(last) => cfg.cooldown_ms.saturating_sub(now.saturating_sub(last)),
    }
}

/// Decide on one submission and update `state` accordingly.
///
/// Checks run in order: ban, session cap, same-type cooldown, rolling rate.
pub fn assess(
    state: &mut UserModerationState,
    kind: ReactionType,
    now: Timestamp,
    cfg: &ModerationConfig,
) -> ModerationVerdict {
    if state.banned {
        return ModerationVerdict::RejectBanned;
    }
    if let Some(cap) = cfg.session_cap {
        if state.total_accepted >= cap {
            return ModerationVerdict::RejectCapReached;
        }
    }
    let remaining = cooldown_remaining(state, kind, now, cfg);
    if remaining > 0 {
        return ModerationVerdict::RejectCooldown {
            remaining_ms: remaining,
        };
    }

    state.prune(now, cfg.rate_window_ms);
    let verdict = match cfg.escalation {
        Escalation::Off => ModerationVerdict::Accept,
        Escalation::WarnThenBan => {
            let would_be = state.recent.len() as u64 + 1;
            if would_be <= u64::from(cfg.rate_limit) {
                ModerationVerdict::Accept
            } else if !state.warned {
                state.warned = true;
                ModerationVerdict::AcceptWithWarning
            } else {
                state.banned = true;
                return ModerationVerdict::RejectBanned;
            }
        }
    };
    state.record_acceptance(kind, now);
    verdict
}
