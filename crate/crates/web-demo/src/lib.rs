//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Each export takes and returns JSON strings; the plain-Rust functions
//! underneath are what the tests exercise.

use std::collections::BTreeMap;

use nudge_core::moderation::{assess, cooldown_remaining, UserModerationState};
use nudge_core::{
    borda_count, haptic_sequence_for, scale_sequence, AggregationEngine, AnalyticsConfig, AnalyticsSnapshot,
    AnonUserId, BordaBallot, BordaResult, HapticSequence, IntensityScaling, ModerationConfig, ModerationVerdict,
    Reaction, ReactionType, SessionId, Timestamp,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct HapticPreview {
    pub kind: ReactionType,
    pub label: &'static str,
    pub emoji: &'static str,
    pub count: u32,
    pub sequence: HapticSequence,
    /// (start_ms, duration_ms, intensity) for every pulse across all repeats.
    pub timeline: Vec<(u64, u64, f64)>,
    pub vibrate: Vec<u64>,
    pub total_duration_ms: u64,
}

pub fn preview(kind: &str, count: u32, base: f64, slope: f64) -> Result<HapticPreview, String> {
    let kind: ReactionType = kind.parse().map_err(|e| format!("{e}"))?;
    let scaled = scale_sequence(&haptic_sequence_for(kind), count, IntensityScaling { base, slope })
        .map_err(|e| e.to_string())?;
    Ok(HapticPreview {
        kind,
        label: kind.label(),
        emoji: kind.emoji(),
        count,
        timeline: scaled.timeline(),
        vibrate: scaled.vibrate_pattern(),
        total_duration_ms: scaled.total_duration_ms(),
        sequence: scaled,
    })
}

#[derive(Debug, Clone, Deserialize)]
pub struct Tap {
    pub user: String,
    pub kind: ReactionType,
    pub at: Timestamp,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    pub window_len_ms: u64,
    pub moderation: ModerationConfig,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            window_len_ms: nudge_core::aggregation::DEFAULT_WINDOW_LEN_MS,
            moderation: ModerationConfig::default(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TapOutcome {
    pub user: String,
    pub kind: ReactionType,
    pub at: Timestamp,
    pub verdict: ModerationVerdict,
    pub cooldown_remaining_ms: u64,
    pub count_in_window: Option<u32>,
    pub window_opened_at: Option<Timestamp>,
    pub play_haptic: bool,
}

#[derive(Debug, Serialize)]
pub struct TapTrace {
    pub taps: Vec<TapOutcome>,
    pub windows: Vec<(ReactionType, Timestamp, u32)>,
    pub analytics: AnalyticsSnapshot,
}

/// Runs taps (any order; sorted by time, stable) through moderation and
/// windowing the way the session service does.
pub fn trace(mut taps: Vec<Tap>, cfg: &TraceConfig) -> Result<TapTrace, String> {
    cfg.moderation.validate()?;
    if cfg.window_len_ms == 0 {
        return Err("window_len_ms must be > 0".into());
    }
    taps.sort_by_key(|t| t.at);
    let session = SessionId::parse("DEMO00").expect("valid id");
    let mut engine = AggregationEngine::new(session.clone(), cfg.window_len_ms);
    let mut users: BTreeMap<String, UserModerationState> = BTreeMap::new();
    let mut accepted = Vec::new();
    let mut out = Vec::with_capacity(taps.len());
    for tap in taps {
        let state = users.entry(tap.user.clone()).or_default();
        let verdict = assess(state, tap.kind, tap.at, &cfg.moderation);
        let cooldown_remaining_ms = cooldown_remaining(state, tap.kind, tap.at, &cfg.moderation);
        let mut outcome = TapOutcome {
            user: tap.user.clone(),
            kind: tap.kind,
            at: tap.at,
            verdict,
            cooldown_remaining_ms,
            count_in_window: None,
            window_opened_at: None,
            play_haptic: false,
        };
        if verdict.is_accepted() {
            let r = Reaction { session: session.clone(), user: AnonUserId(tap.user), kind: tap.kind, at: tap.at };
            engine.expire_windows(tap.at);
            let e = engine.ingest(&r, tap.at);
            outcome.count_in_window = Some(e.count);
            outcome.window_opened_at = Some(e.window_opened_at);
            outcome.play_haptic = e.play_haptic;
            accepted.push(r);
        }
        out.push(outcome);
    }
    let now = out.last().map_or(0, |t| t.at);
    Ok(TapTrace {
        taps: out,
        windows: engine.all_windows().into_iter().map(|w| (w.kind, w.opened_at, w.count)).collect(),
        analytics: AnalyticsSnapshot::compute(&accepted, now, &AnalyticsConfig::default()),
    })
}

pub fn tally(ballots: &[BordaBallot], weights: &[u64]) -> Result<BordaResult, String> {
    borda_count(ballots, weights).map_err(|e| e.to_string())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

/// Haptic descriptor for `kind` scaled for the `count`-th reaction in a window.
#[wasm_bindgen(js_name = hapticPreview)]
pub fn haptic_preview(kind: &str, count: u32, base: f64, slope: f64) -> Result<String, JsValue> {
    to_js(preview(kind, count, base, slope))
}

/// `taps_json`: `[{"user": "a", "kind": "confused", "at": 0}, ...]`;
/// `config_json`: `{"window_len_ms": 10000, "moderation": {...}}`, fields optional.
#[wasm_bindgen(js_name = traceTaps)]
pub fn trace_taps(taps_json: &str, config_json: &str) -> Result<String, JsValue> {
    let taps: Vec<Tap> = serde_json::from_str(taps_json).map_err(|e| JsValue::from_str(&format!("taps: {e}")))?;
    let cfg: TraceConfig = if config_json.trim().is_empty() {
        TraceConfig::default()
    } else {
        serde_json::from_str(config_json).map_err(|e| JsValue::from_str(&format!("config: {e}")))?
    };
    to_js(trace(taps, &cfg))
}

/// `ballots_json`: `[{"voter": "v1", "ranking": ["a", "b", "c"]}, ...]`;
/// `weights_json`: `[3, 2, 1]`.
#[wasm_bindgen(js_name = bordaTally)]
pub fn borda_tally(ballots_json: &str, weights_json: &str) -> Result<String, JsValue> {
    let ballots: Vec<BordaBallot> =
        serde_json::from_str(ballots_json).map_err(|e| JsValue::from_str(&format!("ballots: {e}")))?;
    let weights: Vec<u64> =
        serde_json::from_str(weights_json).map_err(|e| JsValue::from_str(&format!("weights: {e}")))?;
    to_js(tally(&ballots, &weights))
}
