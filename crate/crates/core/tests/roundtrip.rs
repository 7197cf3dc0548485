//! Round-trip properties: canonical text and JSON forms are stable, the
//! parser is total, and the corpus models reach the emit fixpoint in one
//! round.

mod common;

use common::random_model;
use proptest::prelude::*;
use tm_core::corpus::CORPUS_NAMES;
use tm_core::dsl::{emit_text, from_json, parse_model, to_json};

proptest! {
    /// Any byte soup either parses or reports diagnostics; never panics.
    #[test]
    fn parser_is_total(input in ".{0,400}") {
        let _ = parse_model(&input);
    }

    /// Near-grammar soup built from DSL vocabulary, same guarantee.
    #[test]
    fn parser_is_total_on_dsl_shaped_soup(
        words in proptest::collection::vec(
            prop_oneof![
                Just("machine".to_string()),
                Just("flow".to_string()),
                Just("trigger".to_string()),
                Just("store".to_string()),
                Just("event".to_string()),
                Just("create".to_string()),
                Just("receive".to_string()),
                Just("when".to_string()),
                Just("{".to_string()),
                Just("}".to_string()),
                Just(";".to_string()),
                Just("->".to_string()),
                Just("#".to_string()),
                Just(".".to_string()),
                "[a-zA-Z][a-zA-Z0-9_]{0,6}",
                "-?[0-9]{1,4}",
            ],
            0..60,
        )
    ) {
        let _ = parse_model(&words.join(" "));
    }

    /// emit -> parse -> emit is a fixpoint and preserves structure.
    #[test]
    fn emit_parse_emit_fixpoint(seed in any::<u64>()) {
        let (model, _) = random_model(seed);
        let once = emit_text(&model);
        let reparsed = parse_model(&once).expect("canonical text parses");
        prop_assert_eq!(&once, &emit_text(&reparsed));
        prop_assert_eq!(model.stats(), reparsed.stats());
        prop_assert_eq!(to_json(&model), to_json(&reparsed));
    }

    /// JSON documents round-trip losslessly.
    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let (model, _) = random_model(seed);
        let text = to_json(&model);
        let back = from_json(&text).expect("canonical document loads");
        prop_assert_eq!(&text, &to_json(&back));
        prop_assert_eq!(model.stats(), back.stats());
    }
}

#[test]
fn corpus_models_reach_fixpoint_after_one_emit() {
    for name in CORPUS_NAMES {
        let entry = tm_core::corpus::load(name).unwrap();
        let once = emit_text(&entry.model);
        let reparsed = parse_model(&once).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert_eq!(once, emit_text(&reparsed), "{name}: emit not a fixpoint");
        assert_eq!(entry.model.stats(), reparsed.stats(), "{name}: stats drifted");
        assert_eq!(to_json(&entry.model), to_json(&reparsed), "{name}: structure drifted");
    }
}

#[test]
fn corpus_models_round_trip_through_json() {
    for name in CORPUS_NAMES {
        let entry = tm_core::corpus::load(name).unwrap();
        let text = to_json(&entry.model);
        let back = from_json(&text).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert_eq!(text, to_json(&back), "{name}");
        assert_eq!(entry.model.stats(), back.stats(), "{name}");
    }
}

#[test]
fn corpus_manifests_match_after_text_round_trip() {
    for name in CORPUS_NAMES {
        let entry = tm_core::corpus::load(name).unwrap();
        let reparsed = parse_model(&emit_text(&entry.model)).unwrap();
        assert_eq!(reparsed.stats(), entry.manifest, "{name}");
    }
}
