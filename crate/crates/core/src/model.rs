//! Domain types shared across the pipeline.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Milliseconds on the clock injected into the service.
pub type Timestamp = u64;

/// The three supported audience reactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionType {
    HandRaise,
    Confused,
    Confident,
}

/// Display color of a reaction button / log row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplayColor {
    Blue,
    Red,
    Yellow,
}

impl ReactionType {
    pub const ALL: [ReactionType; 3] = [
        ReactionType::HandRaise,
        ReactionType::Confused,
        ReactionType::Confident,
    ];

    /// Stable index into `ALL`, used for matrices and per-type arrays.
    pub fn index(self) -> usize {
        match self {
            ReactionType::HandRaise => 0,
            ReactionType::Confused => 1,
            ReactionType::Confident => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ReactionType::HandRaise => "hand_raise",
            ReactionType::Confused => "confused",
            ReactionType::Confident => "confident",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ReactionType::HandRaise => "Hand-Raise",
            ReactionType::Confused => "Confused",
            ReactionType::Confident => "Confident",
        }
    }

    pub fn emoji(self) -> &'static str {
        match self {
            ReactionType::HandRaise => "\u{270B}",
            ReactionType::Confused => "\u{1F622}",
            ReactionType::Confident => "\u{1F60E}",
        }
    }

    pub fn color(self) -> DisplayColor {
        match self {
            ReactionType::HandRaise => DisplayColor::Blue,
            ReactionType::Confused => DisplayColor::Red,
            ReactionType::Confident => DisplayColor::Yellow,
        }
    }
}

impl fmt::Display for ReactionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReactionType {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hand_raise" | "handraise" => Ok(ReactionType::HandRaise),
            "confused" => Ok(ReactionType::Confused),
            "confident" => Ok(ReactionType::Confident),
            _ => Err(ParseError::ReactionType(s.to_string())),
        }
    }
}

const SESSION_ID_ALPHABET: &[u8; 36] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
pub const SESSION_ID_LEN: usize = 6;

/// Six characters over `[A-Z0-9]`, e.g. `UI31PF`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SessionId(String);

impl SessionId {
    pub fn parse(s: &str) -> Result<Self, ParseError> {
        let valid = s.len() == SESSION_ID_LEN
            && s.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
        if valid {
            Ok(SessionId(s.to_string()))
        } else {
            Err(ParseError::SessionId(s.to_string()))
        }
    }

    /// Draws a uniformly random ID. Callers retry on collision.
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let id = (0..SESSION_ID_LEN)
            .map(|_| SESSION_ID_ALPHABET[rng.gen_range(0..SESSION_ID_ALPHABET.len())] as char)
            .collect();
        SessionId(id)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SessionId {
    type Error = ParseError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        SessionId::parse(&value)
    }
}

impl From<SessionId> for String {
    fn from(id: SessionId) -> Self {
        id.0
    }
}

impl FromStr for SessionId {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SessionId::parse(s)
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Generate a uniformly random session ID.
pub fn generate_session_id<R: Rng + ?Sized>(rng: &mut R) -> SessionId {
    SessionId::generate(rng)
}

/// Public pseudonym of a participant. Appears in logs, analytics and records.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnonUserId(pub String);

impl fmt::Display for AnonUserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Secret bearer token handed to a participant on join.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantToken(pub String);

/// Secret bearer token authorizing streams, analytics and ending a session.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PresenterToken(pub String);

pub(crate) fn random_token<R: Rng + ?Sized>(rng: &mut R, bytes: usize) -> String {
    let mut out = String::with_capacity(bytes * 2);
    for _ in 0..bytes {
        let b: u8 = rng.gen();
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// One anonymous participant's typed input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reaction {
    pub session: SessionId,
    pub user: AnonUserId,
    pub kind: ReactionType,
    pub at: Timestamp,
}
