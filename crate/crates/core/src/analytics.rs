//! Dashboard views computed from the accepted-reaction log.
//!
//! Every function here is a pure function of the accepted reactions (in
//! arrival order) plus a reference time, so values computed live and values
//! recomputed from a stored record agree exactly.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::AnalyticsError;
use crate::model::{AnonUserId, Reaction, ReactionType, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticsConfig {
    pub log_limit: usize,
    pub bin_width_ms: u64,
    pub timeline_span_ms: u64,
    pub dominance_threshold: f64,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig {
            log_limit: 100,
            bin_width_ms: 30_000,
            timeline_span_ms: 600_000,
            dominance_threshold: 0.30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRow {
    pub kind: ReactionType,
    pub label: String,
    pub emoji: String,
    pub at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineBin {
    /// May be negative when the trailing span reaches before clock zero.
    pub start: i64,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineSeries {
    pub bin_width_ms: u64,
    pub from: i64,
    pub to: Timestamp,
    pub series: BTreeMap<ReactionType, Vec<TimelineBin>>,
}

impl TimelineSeries {
    pub fn total(&self, kind: ReactionType) -> u32 {
        self.series
            .get(&kind)
            .map(|bins| bins.iter().map(|b| b.count).sum())
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserShare {
    pub user: AnonUserId,
    pub count: u32,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsSnapshot {
    pub log: Vec<LogRow>,
    pub timeline: TimelineSeries,
    pub cumulative: BTreeMap<ReactionType, u32>,
    pub user_shares: Vec<UserShare>,
    pub flags: Vec<AnonUserId>,
}

impl AnalyticsSnapshot {
    pub fn compute(accepted: &[Reaction], now: Timestamp, cfg: &AnalyticsConfig) -> Self {
        let user_shares = user_shares(accepted);
        let flags = dominance_flags(&user_shares, cfg.dominance_threshold)
            .unwrap_or_default();
        AnalyticsSnapshot {
            log: reaction_log(accepted, cfg.log_limit),
            timeline: timeline(accepted, now, cfg),
            cumulative: cumulative_distribution(accepted),
            user_shares,
            flags,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

/// Newest first; equal timestamps keep later arrivals first.
pub fn reaction_log(accepted: &[Reaction], limit: usize) -> Vec<LogRow> {
    let mut idx: Vec<usize> = (0..accepted.len()).collect();
    idx.sort_by(|&a, &b| accepted[b].at.cmp(&accepted[a].at).then(b.cmp(&a)));
    idx.into_iter()
        .take(limit)
        .map(|i| {
            let r = &accepted[i];
            LogRow {
                kind: r.kind,
                label: r.kind.label().to_string(),
                emoji: r.kind.emoji().to_string(),
                at: r.at,
            }
        })
        .collect()
}

/// Per-type counts over `[now - span, now]` in bins of `bin_width_ms`.
pub fn timeline(accepted: &[Reaction], now: Timestamp, cfg: &AnalyticsConfig) -> TimelineSeries {
    let width = cfg.bin_width_ms.max(1);
    let n_bins = cfg.timeline_span_ms.div_ceil(width).max(1);
    let span = (n_bins * width) as i64;
    let from = now as i64 - span;

    let mut series: BTreeMap<ReactionType, Vec<TimelineBin>> = ReactionType::ALL
        .iter()
        .map(|&k| {
            let bins = (0..n_bins)
                .map(|i| TimelineBin {
                    start: from + (i * width) as i64,
                    count: 0,
                })
                .collect();
            (k, bins)
        })
        .collect();

    for r in accepted {
        let t = r.at as i64;
        if t < from || r.at > now {
            continue;
        }
        let idx = (((t - from) as u64) / width).min(n_bins - 1) as usize;
        if let Some(bins) = series.get_mut(&r.kind) {
            bins[idx].count += 1;
        }
    }

    TimelineSeries {
        bin_width_ms: width,
        from,
        to: now,
        series,
    }
}

pub fn cumulative_distribution(accepted: &[Reaction]) -> BTreeMap<ReactionType, u32> {
    let mut out: BTreeMap<ReactionType, u32> = ReactionType::ALL.iter().map(|&k| (k, 0)).collect();
    for r in accepted {
        *out.entry(r.kind).or_default() += 1;
    }
    out
}

/// Only users with at least one accepted reaction appear. Sorted by count
/// descending, then user id.
pub fn user_shares(accepted: &[Reaction]) -> Vec<UserShare> {
    let mut counts: HashMap<&AnonUserId, u32> = HashMap::new();
    for r in accepted {
        *counts.entry(&r.user).or_default() += 1;
    }
    let total = accepted.len() as f64;
    let mut out: Vec<UserShare> = counts
        .into_iter()
        .map(|(user, count)| UserShare {
            user: user.clone(),
            count,
            share: f64::from(count) / total,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.user.cmp(&b.user)));
    out
}

pub fn dominance_flags(shares: &[UserShare], threshold: f64) -> Result<Vec<AnonUserId>, AnalyticsError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(AnalyticsError::Threshold(threshold));
    }
    Ok(shares
        .iter()
        .filter(|s| s.share >= threshold)
        .map(|s| s.user.clone())
        .collect())
}
