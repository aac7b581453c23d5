use nudge_core::haptics::{haptic_sequence_for, HapticSequence};
use nudge_core::ReactionType;

fn golden(kind: ReactionType) -> &'static str {
    match kind {
        ReactionType::HandRaise => include_str!("fixtures/haptics/hand_raise.json"),
        ReactionType::Confused => include_str!("fixtures/haptics/confused.json"),
        ReactionType::Confident => include_str!("fixtures/haptics/confident.json"),
    }
}

#[test]
fn descriptors_match_golden_files_byte_for_byte() {
    for kind in ReactionType::ALL {
        let json = serde_json::to_string(&haptic_sequence_for(kind)).unwrap();
        assert_eq!(json, golden(kind).trim_end(), "{kind}");
    }
}

#[test]
fn golden_files_parse_back() {
    for kind in ReactionType::ALL {
        let parsed: HapticSequence = serde_json::from_str(golden(kind)).unwrap();
        assert_eq!(parsed, haptic_sequence_for(kind));
        parsed.validate().unwrap();
    }
}

#[test]
fn descriptor_is_deterministic() {
    for kind in ReactionType::ALL {
        assert_eq!(haptic_sequence_for(kind), haptic_sequence_for(kind));
    }
}

#[test]
fn schema_keys() {
    let v: serde_json::Value = serde_json::to_value(haptic_sequence_for(ReactionType::HandRaise)).unwrap();
    let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["gap_ms", "pattern", "repeats"]);
    let mut pulse_keys: Vec<_> = v["pattern"][0].as_object().unwrap().keys().cloned().collect();
    pulse_keys.sort();
    assert_eq!(pulse_keys, ["delay_ms", "duration_ms", "intensity"]);
}
