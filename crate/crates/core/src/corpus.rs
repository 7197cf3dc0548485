//! The bundled worked models: a service queue over a circular buffer and
//! three authentication schemes (key pair, physical trait, one-time
//! password). Each entry ships its model text, injection scripts, event
//! definitions, a chronology, frozen traces, and an element-count manifest.
//!
//! The success and failure scripts of one entry differ only in the
//! adversarial payload — the key, the presented trait, or the echoed
//! password — never in model structure.

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::dsl;
use crate::events::{Chronology, EventDefDoc};
use crate::model::{Model, ModelStats};
use crate::sim::fns::draw_random_int;
use crate::sim::{builtin_fns, FnOutcome, FnRegistry, Script, SimConfig};
use crate::value::Value;

pub const CORPUS_NAMES: [&str; 4] = ["queue", "pki", "biometric", "otp"];

/// Seed and step budget shared by every scenario run.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MAX_STEPS: u64 = 50;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("E-UNKNOWN-CORPUS: no corpus entry named {0:?}")]
    UnknownCorpus(String),
    #[error("corpus entry {name}: model does not parse: {diags:?}")]
    BadModel { name: String, diags: Vec<Diagnostic> },
    #[error("corpus entry {name}: {file}: {message}")]
    BadFile { name: String, file: String, message: String },
    #[error("could not read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub model: Model,
    /// (script name, script), in bundled order; the first is the success path.
    pub scripts: Vec<(String, Script)>,
    pub events: Vec<EventDefDoc>,
    pub chronology: Chronology,
    /// (script name, JSON Lines text) frozen traces, regenerated byte-identically.
    pub goldens: Vec<(String, String)>,
    pub manifest: ModelStats,
}

impl CorpusEntry {
    pub fn script(&self, name: &str) -> Option<&Script> {
        self.scripts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    pub fn golden(&self, name: &str) -> Option<&str> {
        self.goldens
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g.as_str())
    }

    /// The configuration scenario runs use: fixed seed, fixed step budget,
    /// builtins plus the corpus functions.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig::new(DEFAULT_MAX_STEPS, DEFAULT_SEED, registry())
    }
}

struct RawEntry {
    name: &'static str,
    model: &'static str,
    scripts: &'static [(&'static str, &'static str)],
    events: &'static str,
    chronology: &'static str,
    goldens: &'static [(&'static str, &'static str)],
    manifest: &'static str,
}

static RAW: [RawEntry; 4] = [
    RawEntry {
        name: "queue",
        model: include_str!("../../../corpus/queue/model.tm"),
        scripts: &[
            ("single", include_str!("../../../corpus/queue/scripts/single.json")),
            ("full_block", include_str!("../../../corpus/queue/scripts/full_block.json")),
            ("busy_wait", include_str!("../../../corpus/queue/scripts/busy_wait.json")),
        ],
        events: include_str!("../../../corpus/queue/events.json"),
        chronology: include_str!("../../../corpus/queue/chronology.json"),
        goldens: &[
            ("single", include_str!("../../../corpus/queue/golden/single.jsonl")),
            ("full_block", include_str!("../../../corpus/queue/golden/full_block.jsonl")),
            ("busy_wait", include_str!("../../../corpus/queue/golden/busy_wait.jsonl")),
        ],
        manifest: include_str!("../../../corpus/queue/manifest.json"),
    },
    RawEntry {
        name: "pki",
        model: include_str!("../../../corpus/pki/model.tm"),
        scripts: &[
            ("success", include_str!("../../../corpus/pki/scripts/success.json")),
            ("wrong_key", include_str!("../../../corpus/pki/scripts/wrong_key.json")),
        ],
        events: include_str!("../../../corpus/pki/events.json"),
        chronology: include_str!("../../../corpus/pki/chronology.json"),
        goldens: &[
            ("success", include_str!("../../../corpus/pki/golden/success.jsonl")),
            ("wrong_key", include_str!("../../../corpus/pki/golden/wrong_key.jsonl")),
        ],
        manifest: include_str!("../../../corpus/pki/manifest.json"),
    },
    RawEntry {
        name: "biometric",
        model: include_str!("../../../corpus/biometric/model.tm"),
        scripts: &[
            ("success", include_str!("../../../corpus/biometric/scripts/success.json")),
            ("mismatch", include_str!("../../../corpus/biometric/scripts/mismatch.json")),
        ],
        events: include_str!("../../../corpus/biometric/events.json"),
        chronology: include_str!("../../../corpus/biometric/chronology.json"),
        goldens: &[
            ("success", include_str!("../../../corpus/biometric/golden/success.jsonl")),
            ("mismatch", include_str!("../../../corpus/biometric/golden/mismatch.jsonl")),
        ],
        manifest: include_str!("../../../corpus/biometric/manifest.json"),
    },
    RawEntry {
        name: "otp",
        model: include_str!("../../../corpus/otp/model.tm"),
        scripts: &[
            ("success", include_str!("../../../corpus/otp/scripts/success.json")),
            ("wrong_otp", include_str!("../../../corpus/otp/scripts/wrong_otp.json")),
        ],
        events: include_str!("../../../corpus/otp/events.json"),
        chronology: include_str!("../../../corpus/otp/chronology.json"),
        goldens: &[
            ("success", include_str!("../../../corpus/otp/golden/success.jsonl")),
            ("wrong_otp", include_str!("../../../corpus/otp/golden/wrong_otp.jsonl")),
        ],
        manifest: include_str!("../../../corpus/otp/manifest.json"),
    },
];

fn build_entry(
    name: &str,
    model_text: &str,
    scripts: Vec<(String, String)>,
    events_text: &str,
    chronology_text: &str,
    goldens: Vec<(String, String)>,
    manifest_text: &str,
) -> Result<CorpusEntry, CorpusError> {
    let model = dsl::parse_model(model_text).map_err(|diags| CorpusError::BadModel {
        name: name.to_string(),
        diags,
    })?;
    let mut parsed_scripts = Vec::new();
    for (script_name, text) in scripts {
        let script = Script::from_json(&text).map_err(|e| CorpusError::BadFile {
            name: name.to_string(),
            file: format!("scripts/{script_name}.json"),
            message: e.to_string(),
        })?;
        parsed_scripts.push((script_name, script));
    }
    let events: Vec<EventDefDoc> =
        serde_json::from_str(events_text).map_err(|e| CorpusError::BadFile {
            name: name.to_string(),
            file: "events.json".to_string(),
            message: e.to_string(),
        })?;
    let chronology = Chronology::from_json(chronology_text).map_err(|e| CorpusError::BadFile {
        name: name.to_string(),
        file: "chronology.json".to_string(),
        message: e.to_string(),
    })?;
    let manifest: ModelStats =
        serde_json::from_str(manifest_text).map_err(|e| CorpusError::BadFile {
            name: name.to_string(),
            file: "manifest.json".to_string(),
            message: e.to_string(),
        })?;
    Ok(CorpusEntry {
        name: name.to_string(),
        model,
        scripts: parsed_scripts,
        events,
        chronology,
        goldens,
        manifest,
    })
}

/// Load a bundled corpus entry by name.
pub fn load(name: &str) -> Result<CorpusEntry, CorpusError> {
    let raw = RAW
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| CorpusError::UnknownCorpus(name.to_string()))?;
    build_entry(
        raw.name,
        raw.model,
        raw.scripts
            .iter()
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect(),
        raw.events,
        raw.chronology,
        raw.goldens
            .iter()
            .map(|(n, t)| (n.to_string(), t.to_string()))
            .collect(),
        raw.manifest,
    )
}

/// Load an entry from a corpus directory on disk (the `TM_CORPUS_DIR`
/// layout): `<dir>/<name>/model.tm`, `scripts/*.json`, `events.json`,
/// `chronology.json`, `golden/*.jsonl`, `manifest.json`.
pub fn load_from_dir(dir: &std::path::Path, name: &str) -> Result<CorpusEntry, CorpusError> {
    let base = dir.join(name);
    let read = |path: std::path::PathBuf| -> Result<String, CorpusError> {
        std::fs::read_to_string(&path).map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    };
    if !base.is_dir() {
        return Err(CorpusError::UnknownCorpus(name.to_string()));
    }
    let model_text = read(base.join("model.tm"))?;
    let mut scripts = Vec::new();
    let mut script_paths: Vec<_> = std::fs::read_dir(base.join("scripts"))
        .map_err(|e| CorpusError::Io {
            path: base.join("scripts").display().to_string(),
            message: e.to_string(),
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    script_paths.sort();
    for path in script_paths {
        let script_name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        scripts.push((script_name, read(path)?));
    }
    let mut goldens = Vec::new();
    if base.join("golden").is_dir() {
        let mut golden_paths: Vec<_> = std::fs::read_dir(base.join("golden"))
            .map_err(|e| CorpusError::Io {
                path: base.join("golden").display().to_string(),
                message: e.to_string(),
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "jsonl"))
            .collect();
        golden_paths.sort();
        for path in golden_paths {
            let golden_name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            goldens.push((golden_name, read(path)?));
        }
    }
    build_entry(
        name,
        &model_text,
        scripts,
        &read(base.join("events.json"))?,
        &read(base.join("chronology.json"))?,
        goldens,
        &read(base.join("manifest.json"))?,
    )
}

// ---------------------------------------------------------------------------
// Corpus processing functions
// ---------------------------------------------------------------------------

/// Builtins plus the functions the corpus models name.
pub fn registry() -> FnRegistry {
    let mut registry = builtin_fns();
    let mut add = |name: &str, f: fn(&mut crate::sim::FnCtx) -> Result<FnOutcome, String>| {
        registry.register(name, f).expect("corpus fn names are distinct");
    };
    // queue
    add("sync_blocked", |ctx| {
        let rear = ctx.stores.get_int("rear")?;
        let front = ctx.stores.get_int("front")?;
        let n = ctx.stores.get_int("n")?;
        let blocked = (rear + 1).rem_euclid(n) == front;
        Ok(FnOutcome::payload(Value::Bool(blocked)).write("blocked", Value::Bool(blocked)))
    });
    add("set_busy", |ctx| {
        Ok(FnOutcome::payload(ctx.payload.clone()).write("busy", Value::Bool(true)))
    });
    add("clear_busy", |ctx| {
        Ok(FnOutcome::payload(ctx.payload.clone()).write("busy", Value::Bool(false)))
    });
    // authentication models
    add("load_key", |ctx| {
        let key = ctx
            .payload
            .as_int()
            .ok_or_else(|| format!("needs an int payload, found {}", ctx.payload.kind_name()))?;
        Ok(FnOutcome::payload(ctx.payload.clone()).write("key", Value::Int(key)))
    });
    add("note_login", |ctx| {
        Ok(FnOutcome::payload(ctx.payload.clone()).write("session", Value::Bool(true)))
    });
    add("gen_secret", |ctx| {
        let store = ctx
            .stage_tag
            .clone()
            .ok_or_else(|| "needs a #tag naming the store to fill".to_string())?;
        let drawn = draw_random_int(ctx.rng);
        Ok(FnOutcome::payload(Value::Int(drawn)).write(&store, Value::Int(drawn)))
    });
    add("check_challenge", |ctx| {
        let response = ctx
            .payload
            .as_int()
            .ok_or_else(|| format!("needs an int payload, found {}", ctx.payload.kind_name()))?;
        let challenge = ctx.stores.get_int("challenge")?;
        Ok(FnOutcome::payload(Value::record([
            ("result", Value::Bool(response == challenge)),
        ])))
    });
    add("open_session", |ctx| {
        Ok(FnOutcome::payload(ctx.payload.clone()).write("maint", Value::Bool(true)))
    });
    add("vault_trait", |ctx| {
        let trait_text = ctx
            .payload
            .as_str()
            .ok_or_else(|| format!("needs a string payload, found {}", ctx.payload.kind_name()))?
            .to_string();
        Ok(FnOutcome::payload(ctx.payload.clone()).write("stored", Value::Str(trait_text)))
    });
    add("pair_trait", |ctx| {
        let fresh = ctx
            .payload
            .as_str()
            .ok_or_else(|| format!("needs a string payload, found {}", ctx.payload.kind_name()))?
            .to_string();
        let vaulted = ctx.stores.get_str("stored")?.to_string();
        Ok(FnOutcome::payload(Value::record([
            ("a", Value::Str(fresh)),
            ("b", Value::Str(vaulted)),
        ])))
    });
    add("compare_otp", |ctx| {
        let entered = ctx
            .payload
            .as_int()
            .ok_or_else(|| format!("needs an int payload, found {}", ctx.payload.kind_name()))?;
        let sent = ctx.stores.get_int("otp")?;
        Ok(FnOutcome::payload(Value::record([
            ("result", Value::Bool(entered == sent)),
        ])))
    });
    registry
}

// ---------------------------------------------------------------------------
// Scenario matrix
// ---------------------------------------------------------------------------

/// What a scenario run is expected to show.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    /// Events that must occur at least once.
    pub required: Vec<String>,
    /// Events that must not occur at all.
    pub forbidden: Vec<String>,
    /// Exact number of refused injections.
    pub refused: usize,
    /// Whether the occurrence list must conform to the entry's chronology.
    pub conforms: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub script: String,
    pub outcome: String,
    pub expect: Expectation,
}

fn scenario(script: &str, outcome: &str, required: &[&str], forbidden: &[&str], refused: usize) -> Scenario {
    Scenario {
        script: script.to_string(),
        outcome: outcome.to_string(),
        expect: Expectation {
            required: required.iter().map(|s| s.to_string()).collect(),
            forbidden: forbidden.iter().map(|s| s.to_string()).collect(),
            refused,
            conforms: true,
        },
    }
}

/// The per-entry scripts and their expected outcomes.
pub fn scenario_matrix(name: &str) -> Result<Vec<Scenario>, CorpusError> {
    match name {
        "queue" => Ok(vec![
            scenario("single", "one customer flows through an idle desk", &["E1", "E3", "E9", "E10", "E11"], &["E2", "E5"], 0),
            scenario(
                "full_block",
                "a full buffer refuses the fifth arrival until one service completes",
                &["E2", "E5", "E9", "E11", "E13"],
                &[],
                1,
            ),
            scenario("busy_wait", "the second customer waits while the desk is busy", &["E3", "E9", "E10", "E11"], &["E2"], 0),
        ]),
        "pki" => Ok(vec![
            scenario("success", "matching keys open a maintenance session", &["E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8"], &[], 0),
            scenario("wrong_key", "a mismatched key leaves the session closed", &["E1", "E2", "E3", "E4", "E5", "E6", "E7"], &["E8"], 0),
        ]),
        "biometric" => Ok(vec![
            scenario("success", "a matching trait opens a maintenance session", &["E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9", "E10"], &[], 0),
            scenario("mismatch", "a mismatched trait leaves the session closed", &["E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9"], &["E10"], 0),
        ]),
        "otp" => Ok(vec![
            scenario("success", "echoing the sent password opens a maintenance session", &["E1", "E2", "E3", "E4", "E5", "E6", "E7"], &[], 0),
            scenario("wrong_otp", "any other echo leaves the session closed", &["E1", "E2", "E3", "E4", "E5", "E6"], &["E7"], 0),
        ]),
        other => Err(CorpusError::UnknownCorpus(other.to_string())),
    }
}
