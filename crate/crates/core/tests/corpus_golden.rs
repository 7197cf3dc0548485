//! Corpus regression: frozen traces regenerate byte-identically, manifests
//! match live stats, and the bundled event-definition export matches the
//! models.
//!
//! Run with `REGEN_GOLDENS=1` to rewrite `golden/*.jsonl`, `events.json`,
//! and `manifest.json` under `corpus/` after an intentional change, then
//! rebuild so the embedded copies pick the new bytes up.

use std::path::PathBuf;

use tm_core::corpus::{self, CORPUS_NAMES};
use tm_core::events::defs_to_docs;
use tm_core::sim::simulate;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn regen_requested() -> bool {
    std::env::var_os("REGEN_GOLDENS").is_some_and(|v| v == "1")
}

#[test]
fn golden_traces_regenerate_byte_identically() {
    let regen = regen_requested();
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        let config = entry.sim_config();
        for (script_name, script) in &entry.scripts {
            let trace = simulate(&entry.model, script, &config)
                .unwrap_or_else(|e| panic!("{name}/{script_name}: {e}"));
            let text = trace.to_jsonl();
            if regen {
                let path = corpus_dir().join(name).join("golden").join(format!("{script_name}.jsonl"));
                std::fs::write(&path, &text).unwrap();
                continue;
            }
            let golden = entry
                .golden(script_name)
                .unwrap_or_else(|| panic!("{name}: no golden for {script_name}"));
            assert_eq!(
                text, golden,
                "{name}/{script_name}: regenerated trace differs from the frozen one"
            );
        }
    }
}

#[test]
fn manifests_match_model_stats() {
    let regen = regen_requested();
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        let stats = entry.model.stats();
        if regen {
            let path = corpus_dir().join(name).join("manifest.json");
            std::fs::write(&path, serde_json::to_string_pretty(&stats).unwrap() + "\n").unwrap();
            continue;
        }
        assert_eq!(stats, entry.manifest, "{name}: manifest drifted");
    }
}

#[test]
fn event_exports_match_model_definitions() {
    let regen = regen_requested();
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        let docs = defs_to_docs(&entry.model, &entry.model.events);
        if regen {
            let path = corpus_dir().join(name).join("events.json");
            std::fs::write(&path, serde_json::to_string_pretty(&docs).unwrap() + "\n").unwrap();
            continue;
        }
        let embedded = serde_json::to_string(&entry.events).unwrap();
        let live = serde_json::to_string(&docs).unwrap();
        assert_eq!(live, embedded, "{name}: events.json drifted");
    }
}

/// Occurrence listing used when auditing the corpus by hand:
/// `cargo test -p tm-core --test corpus_golden -- --ignored --nocapture`.
#[test]
#[ignore]
fn print_occurrence_sequences() {
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        let config = entry.sim_config();
        for (script_name, script) in &entry.scripts {
            let trace = simulate(&entry.model, script, &config).unwrap();
            let occs: Vec<String> = trace
                .records
                .iter()
                .filter(|r| r.kind == tm_core::sim::RecordKind::Event)
                .map(|r| format!("{}@{}", r.element, r.step))
                .collect();
            println!("{name}/{script_name}: {}", occs.join(" "));
        }
    }
}
