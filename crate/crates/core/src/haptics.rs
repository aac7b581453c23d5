//! Device-agnostic haptic descriptors.
//!
//! A [`HapticSequence`] is a short pulse pattern repeated a fixed number of
//! times with a gap between repeats. The JSON form is the wire format sent to
//! presenter clients:
//!
//! ```json
//! {"pattern":[{"delay_ms":0,"duration_ms":300,"intensity":1.0}],"repeats":4,"gap_ms":150}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::HapticError;
use crate::model::ReactionType;

/// Every built-in sequence plays its pattern this many times.
pub const BUILTIN_REPEATS: u32 = 4;
pub const BUILTIN_GAP_MS: u64 = 150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HapticPulse {
    /// Silence before this pulse, measured from the end of the previous one.
    pub delay_ms: u64,
    pub duration_ms: u64,
    /// Relative amplitude in (0, 1].
    pub intensity: f64,
}

impl HapticPulse {
    pub fn new(delay_ms: u64, duration_ms: u64, intensity: f64) -> Result<Self, HapticError> {
        let pulse = HapticPulse {
            delay_ms,
            duration_ms,
            intensity,
        };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn validate(&self) -> Result<(), HapticError> {
        if self.duration_ms == 0 {
            return Err(HapticError::InvalidPulse("duration must be > 0".into()));
        }
        if !(self.intensity > 0.0 && self.intensity <= 1.0) {
            return Err(HapticError::InvalidPulse(format!(
                "intensity {} outside (0, 1]",
                self.intensity
            )));
        }
        Ok(())
    }

    fn span_ms(&self) -> u64 {
        self.delay_ms + self.duration_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapticSequence {
    pub pattern: Vec<HapticPulse>,
    pub repeats: u32,
    pub gap_ms: u64,
}

impl HapticSequence {
    pub fn pattern_duration_ms(&self) -> u64 {
        self.pattern.iter().map(HapticPulse::span_ms).sum()
    }

    /// `repeats * pattern + (repeats - 1) * gap`.
    pub fn total_duration_ms(&self) -> u64 {
        if self.repeats == 0 {
            return 0;
        }
        let r = u64::from(self.repeats);
        r * self.pattern_duration_ms() + (r - 1) * self.gap_ms
    }

    pub fn max_intensity(&self) -> f64 {
        self.pattern
            .iter()
            .map(|p| p.intensity)
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), HapticError> {
        if self.pattern.is_empty() || self.repeats == 0 {
            return Err(HapticError::InvalidPulse("empty sequence".into()));
        }
        self.pattern.iter().try_for_each(HapticPulse::validate)
    }

    /// Fully unrolled timeline of `(start_ms, duration_ms, intensity)` for
    /// every pulse across all repeats.
    pub fn timeline(&self) -> Vec<(u64, u64, f64)> {
        let mut out = Vec::with_capacity(self.pattern.len() * self.repeats as usize);
        let mut cursor = 0;
        for rep in 0..self.repeats {
            if rep > 0 {
                cursor += self.gap_ms;
            }
            for pulse in &self.pattern {
                cursor += pulse.delay_ms;
                out.push((cursor, pulse.duration_ms, pulse.intensity));
                cursor += pulse.duration_ms;
            }
        }
        out
    }

    /// Alternating on/off durations starting with "on", as accepted by
    /// `navigator.vibrate`. Intensity is dropped.
    pub fn vibrate_pattern(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut pending_off = 0;
        for (i, (start, duration, _)) in self.timeline().into_iter().enumerate() {
            if i > 0 {
                out.push(start - pending_off);
            }
            out.push(duration);
            pending_off = start + duration;
        }
        out
    }
}

fn pulse(delay_ms: u64, duration_ms: u64, intensity: f64) -> HapticPulse {
    HapticPulse {
        delay_ms,
        duration_ms,
        intensity,
    }
}

/// The fixed sequence for a reaction type.
///
/// Hand-raise is a heartbeat (strong beat then a weaker one), confused is one
/// long strong buzz, confident is two faint ticks.
pub fn haptic_sequence_for(kind: ReactionType) -> HapticSequence {
    let pattern = match kind {
        ReactionType::HandRaise => vec![pulse(0, 12, 1.0), pulse(80, 12, 0.6)],
        ReactionType::Confused => vec![pulse(0, 300, 1.0)],
        ReactionType::Confident => vec![pulse(0, 10, 0.3), pulse(60, 10, 0.3)],
    };
    HapticSequence {
        pattern,
        repeats: BUILTIN_REPEATS,
        gap_ms: BUILTIN_GAP_MS,
    }
}

/// Linear intensity boost by aggregated count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityScaling {
    pub base: f64,
    pub slope: f64,
}

impl Default for IntensityScaling {
    fn default() -> Self {
        IntensityScaling {
            base: 1.0,
            slope: 0.25,
        }
    }
}

impl IntensityScaling {
    /// Multiplier applied for `count` aggregated reactions (count >= 2).
    pub fn factor(&self, count: u32) -> f64 {
        self.base + self.slope * f64::from(count.saturating_sub(1))
    }
}

/// Scale every pulse's intensity by `scaling.factor(count)`, clamped to 1.0.
/// Timing is never touched and `count == 1` is the identity.
pub fn scale_sequence(
    seq: &HapticSequence,
    count: u32,
    scaling: IntensityScaling,
) -> Result<HapticSequence, HapticError> {
    if count == 0 {
        return Err(HapticError::ZeroCount);
    }
    if count == 1 {
        return Ok(seq.clone());
    }
    let factor = scaling.factor(count);
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(HapticError::InvalidPulse(format!(
            "scaling factor {factor} must be positive"
        )));
    }
    let mut out = seq.clone();
    for p in &mut out.pattern {
        p.intensity = (p.intensity * factor).min(1.0);
    }
    Ok(out)
}
