//! Positional (Borda-style) scoring of top-k preference ballots.
//!
//! Each ballot ranks up to `weights.len()` distinct candidates; position `i`
//! earns `weights[i]` points. Candidates are ordered by total points, ties
//! broken by candidate name ascending.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::BordaError;

pub const DEFAULT_WEIGHTS: [u64; 3] = [3, 2, 1];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BordaBallot {
    pub voter: String,
    /// Most preferred first.
    pub ranking: Vec<String>,
}

impl BordaBallot {
    pub fn new<S: Into<String>>(voter: impl Into<String>, ranking: impl IntoIterator<Item = S>) -> Self {
        BordaBallot {
            voter: voter.into(),
            ranking: ranking.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BordaResult {
    pub totals: BTreeMap<String, u64>,
    pub ranking: Vec<String>,
}

impl BordaResult {
    pub fn points(&self, candidate: &str) -> u64 {
        self.totals.get(candidate).copied().unwrap_or(0)
    }

    pub fn total_points(&self) -> u64 {
        self.totals.values().sum()
    }

    pub fn top(&self, k: usize) -> &[String] {
        &self.ranking[..k.min(self.ranking.len())]
    }
}

fn check_weights(weights: &[u64]) -> Result<(), BordaError> {
    let ok = !weights.is_empty()
        && weights.iter().all(|&w| w > 0)
        && weights.windows(2).all(|w| w[0] > w[1]);
    if ok {
        Ok(())
    } else {
        Err(BordaError::InvalidWeights(weights.to_vec()))
    }
}

fn check_ballot(ballot: &BordaBallot, max_len: usize) -> Result<(), BordaError> {
    if ballot.ranking.len() > max_len {
        return Err(BordaError::BallotTooLong {
            voter: ballot.voter.clone(),
            len: ballot.ranking.len(),
            max: max_len,
        });
    }
    let mut seen = HashSet::new();
    for c in &ballot.ranking {
        if !seen.insert(c.as_str()) {
            return Err(BordaError::DuplicateCandidate {
                voter: ballot.voter.clone(),
                candidate: c.clone(),
            });
        }
    }
    Ok(())
}

/// Orders `(candidate, points)` pairs by points descending, then name.
pub fn rank_by_points(totals: &BTreeMap<String, u64>) -> Vec<String> {
    let mut entries: Vec<(&String, &u64)> = totals.iter().collect();
    entries.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    entries.into_iter().map(|(c, _)| c.clone()).collect()
}

pub fn borda_count(ballots: &[BordaBallot], weights: &[u64]) -> Result<BordaResult, BordaError> {
    check_weights(weights)?;
    let mut totals: BTreeMap<String, u64> = BTreeMap::new();
    for ballot in ballots {
        check_ballot(ballot, weights.len())?;
        for (candidate, &w) in ballot.ranking.iter().zip(weights) {
            *totals.entry(candidate.clone()).or_default() += w;
        }
    }
    let ranking = rank_by_points(&totals);
    Ok(BordaResult { totals, ranking })
}
