//! Scenario files.
//!
//! ```toml
//! name = "C2-replay"
//! enrollment = 200
//! active_fraction = 0.21
//! duration_min = 50
//! seed = 2
//!
//! [moderation]            # any ModerationConfig field; defaults otherwise
//! escalation = "off"
//!
//! [engaged]
//! react_prob = 0.78
//! latency_median_ms = 4000
//! latency_sigma = 0.5
//!
//! [[spammers]]
//! period_ms = 6667
//! types = ["hand_raise", "confused", "confident"]
//!
//! [script]
//! every_ms = 90000
//! cycle = ["confusing_moment", "checkpoint", "question_pause"]
//! ```
//!
//! Active students are `round(enrollment * active_fraction)`; the first
//! `spammers.len()` of them are spammers, the rest engaged. Everyone else
//! lurks and never joins.

use std::path::Path;

use anyhow::{bail, Context};
use nudge_core::{ModerationConfig, ReactionType};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LectureEvent {
    ConfusingMoment,
    Checkpoint,
    QuestionPause,
}

impl LectureEvent {
    /// The reaction an engaged student sends in response.
    pub fn reaction(self) -> ReactionType {
        match self {
            LectureEvent::ConfusingMoment => ReactionType::Confused,
            LectureEvent::Checkpoint => ReactionType::Confident,
            LectureEvent::QuestionPause => ReactionType::HandRaise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub at_ms: u64,
    pub event: LectureEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LectureScript {
    /// Explicit prompts; merged with the periodic ones.
    pub prompts: Vec<Prompt>,
    pub every_ms: Option<u64>,
    pub cycle: Vec<LectureEvent>,
}

impl Default for LectureScript {
    fn default() -> Self {
        LectureScript {
            prompts: Vec::new(),
            every_ms: Some(90_000),
            cycle: vec![
                LectureEvent::ConfusingMoment,
                LectureEvent::Checkpoint,
                LectureEvent::QuestionPause,
            ],
        }
    }
}

impl LectureScript {
    /// Prompts in time order within `[0, duration_ms)`.
    pub fn expand(&self, duration_ms: u64) -> Vec<Prompt> {
        let mut out: Vec<Prompt> = self.prompts.iter().copied().filter(|p| p.at_ms < duration_ms).collect();
        if let (Some(every), false) = (self.every_ms, self.cycle.is_empty()) {
            let mut t = every;
            let mut i = 0;
            while t < duration_ms {
                out.push(Prompt {
                    at_ms: t,
                    event: self.cycle[i % self.cycle.len()],
                });
                t += every;
                i += 1;
            }
        }
        out.sort_by_key(|p| p.at_ms);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngagedParams {
    /// Chance of reacting to any given prompt.
    pub react_prob: f64,
    /// Median of the lognormal reaction latency.
    pub latency_median_ms: f64,
    pub latency_sigma: f64,
}

impl Default for EngagedParams {
    fn default() -> Self {
        EngagedParams {
            react_prob: 0.5,
            latency_median_ms: 4_000.0,
            latency_sigma: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpammerParams {
    /// One submission every `period_ms`, cycling through `types`.
    pub period_ms: u64,
    pub types: Vec<ReactionType>,
    #[serde(default)]
    pub start_ms: u64,
}

impl SpammerParams {
    /// Each type resubmitted the moment its cooldown allows.
    pub fn max_rate(cooldown_ms: u64) -> Self {
        SpammerParams {
            period_ms: cooldown_ms.div_ceil(3),
            types: ReactionType::ALL.to_vec(),
            start_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StudentProfile {
    Engaged(EngagedParams),
    Spammer(SpammerParams),
    Lurker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub enrollment: u32,
    pub active_fraction: f64,
    pub duration_min: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub moderation: ModerationConfig,
    #[serde(default)]
    pub window_len_ms: Option<u64>,
    #[serde(default)]
    pub engaged: EngagedParams,
    #[serde(default)]
    pub spammers: Vec<SpammerParams>,
    #[serde(default)]
    pub script: LectureScript,
}

const PRESETS: [(&str, &str); 7] = [
    ("C1", include_str!("../scenarios/c1.toml")),
    ("C2", include_str!("../scenarios/c2.toml")),
    ("C2-replay", include_str!("../scenarios/c2-replay.toml")),
    ("C3", include_str!("../scenarios/c3.toml")),
    ("C4", include_str!("../scenarios/c4.toml")),
    ("C5", include_str!("../scenarios/c5.toml")),
    ("C6", include_str!("../scenarios/c6.toml")),
];

impl Scenario {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn preset(name: &str) -> Option<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, text)| Self::from_toml(text).expect("bundled presets parse"))
    }

    pub fn preset_toml(name: &str) -> Option<&'static str> {
        PRESETS.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, t)| *t)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.enrollment == 0 {
            bail!("enrollment must be > 0");
        }
        if !(0.0..=1.0).contains(&self.active_fraction) {
            bail!("active_fraction must be in [0, 1]");
        }
        if !(self.duration_min > 0.0) {
            bail!("duration_min must be > 0");
        }
        if !(0.0..=1.0).contains(&self.engaged.react_prob) {
            bail!("engaged.react_prob must be in [0, 1]");
        }
        if !(self.engaged.latency_median_ms > 0.0) || self.engaged.latency_sigma < 0.0 {
            bail!("engaged latency parameters must be positive");
        }
        for s in &self.spammers {
            if s.period_ms == 0 || s.types.is_empty() {
                bail!("spammer needs period_ms > 0 and at least one type");
            }
        }
        if self.spammers.len() as u32 > self.active_count() {
            bail!("more spammers than active students");
        }
        self.moderation.validate().map_err(anyhow::Error::msg)?;
        Ok(())
    }

    pub fn duration_ms(&self) -> u64 {
        (self.duration_min * 60_000.0).round() as u64
    }

    pub fn active_count(&self) -> u32 {
        (f64::from(self.enrollment) * self.active_fraction).round() as u32
    }

    /// Profile per enrolled student, active ones first.
    pub fn profiles(&self) -> Vec<StudentProfile> {
        let active = self.active_count() as usize;
        (0..self.enrollment as usize)
            .map(|i| {
                if i < self.spammers.len() {
                    StudentProfile::Spammer(self.spammers[i].clone())
                } else if i < active {
                    StudentProfile::Engaged(self.engaged.clone())
                } else {
                    StudentProfile::Lurker
                }
            })
            .collect()
    }
}
