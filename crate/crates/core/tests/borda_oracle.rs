use std::collections::BTreeMap;

use nudge_core::borda::{borda_count, BordaBallot, DEFAULT_WEIGHTS};
use proptest::prelude::*;

/// Independent accumulation: walk every (ballot, position) pair by index.
fn oracle_totals(ballots: &[BordaBallot], weights: &[u64]) -> BTreeMap<String, u64> {
    let mut totals = BTreeMap::new();
    for b in ballots {
        for pos in 0..b.ranking.len() {
            let entry = totals.entry(b.ranking[pos].clone()).or_insert(0u64);
            *entry += weights[pos];
        }
    }
    totals
}

/// Selection by repeated argmax with the name tie rule.
fn oracle_top(totals: &BTreeMap<String, u64>, k: usize) -> Vec<String> {
    let mut remaining = totals.clone();
    let mut out = Vec::new();
    while out.len() < k && !remaining.is_empty() {
        let mut best: Option<(&String, u64)> = None;
        for (name, &pts) in &remaining {
            best = match best {
                Some((_, bp)) if bp >= pts => best,
                _ => Some((name, pts)),
            };
        }
        let name = best.unwrap().0.clone();
        remaining.remove(&name);
        out.push(name);
    }
    out
}

const CANDIDATES: [&str; 12] = ["c00", "c01", "c02", "c03", "c04", "c05", "c06", "c07", "c08", "c09", "c10", "c11"];

fn ballot_strategy() -> impl Strategy<Value = BordaBallot> {
    (Just(CANDIDATES.to_vec()).prop_shuffle(), 0usize..=3).prop_map(|(order, len)| BordaBallot {
        voter: String::new(),
        ranking: order[..len].iter().map(|s| s.to_string()).collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_brute_force(ballots in prop::collection::vec(ballot_strategy(), 0..=100)) {
        let r = borda_count(&ballots, &DEFAULT_WEIGHTS).unwrap();
        let expected = oracle_totals(&ballots, &DEFAULT_WEIGHTS);
        prop_assert_eq!(&r.totals, &expected);
        prop_assert_eq!(r.top(3).to_vec(), oracle_top(&expected, 3));
        let awarded: u64 = ballots.iter().map(|b| DEFAULT_WEIGHTS[..b.ranking.len()].iter().sum::<u64>()).sum();
        prop_assert_eq!(r.total_points(), awarded);
    }

    #[test]
    fn ranking_invariant_under_weight_scaling(
        ballots in prop::collection::vec(ballot_strategy(), 0..=100),
        k in 1u64..20,
    ) {
        let base = borda_count(&ballots, &DEFAULT_WEIGHTS).unwrap();
        let scaled_w: Vec<u64> = DEFAULT_WEIGHTS.iter().map(|w| w * k).collect();
        let scaled = borda_count(&ballots, &scaled_w).unwrap();
        prop_assert_eq!(base.ranking, scaled.ranking);
    }
}

#[test]
fn full_ballots_sum_to_six_each() {
    let ballots: Vec<_> = (0..26)
        .map(|i| BordaBallot::new(format!("v{i}"), [CANDIDATES[i % 12], CANDIDATES[(i + 1) % 12], CANDIDATES[(i + 5) % 12]]))
        .collect();
    let r = borda_count(&ballots, &DEFAULT_WEIGHTS).unwrap();
    assert_eq!(r.total_points(), 156);
}

/// Published instructor-survey totals.
const SURVEY_TOTALS: [(&str, u64); 12] = [
    ("Confused / frustrated", 37),
    ("Hand-raising for questions/comments", 29),
    ("Confident in understanding", 21),
    ("Engaged", 19),
    ("Curious / surprised", 14),
    ("Speed up lecture pace", 11),
    ("Eager to participate", 8),
    ("Slow down lecture pace", 6),
    ("Bored / distracted", 5),
    ("Overwhelmed / need a break", 3),
    ("In disagreement", 2),
    ("In agreement", 1),
];

#[test]
fn survey_totals_are_consistent_with_26_top3_ballots() {
    let sum: u64 = SURVEY_TOTALS.iter().map(|(_, p)| p).sum();
    assert_eq!(sum, 156);
    assert_eq!(sum, 26 * DEFAULT_WEIGHTS.iter().sum::<u64>());
}

#[test]
fn reconstructed_survey_ballots_reproduce_totals() {
    let ballots: Vec<BordaBallot> =
        serde_json::from_str(include_str!("fixtures/survey_ballots_reconstructed.json")).unwrap();
    assert_eq!(ballots.len(), 26);
    assert!(ballots.iter().all(|b| b.ranking.len() == 3));
    let r = borda_count(&ballots, &DEFAULT_WEIGHTS).unwrap();
    for (name, pts) in SURVEY_TOTALS {
        assert_eq!(r.points(name), pts, "{name}");
    }
    assert_eq!(
        r.top(3),
        ["Confused / frustrated", "Hand-raising for questions/comments", "Confident in understanding"]
    );
    assert_eq!(r.ranking, SURVEY_TOTALS.iter().map(|(n, _)| n.to_string()).collect::<Vec<_>>());
}
