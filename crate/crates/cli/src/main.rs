//! `tm` — model tooling: validate, simulate, check event chronologies,
//! render DOT diagrams, and run the bundled corpus.
//!
//! Exit status: 0 success/conforms, 1 diagnostics or non-conformance,
//! 2 usage, IO, or schema errors. Summaries go to stdout, diagnostics to
//! stderr.

mod dot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tm_core::corpus;
use tm_core::diag::Diagnostic;
use tm_core::dsl;
use tm_core::events::{check_chronology, detect_events, resolve_defs, Chronology, Conformance};
use tm_core::model::Model;
use tm_core::sim::{simulate, RecordKind, Script, SimConfig, SimError, Trace};

#[derive(Parser)]
#[command(name = "tm", version, about = "Tooling for five-stage machine models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and run all structural checks.
    Validate {
        /// Model file (.tm text or .json document).
        path: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run a scripted simulation and write its trace.
    Simulate {
        path: PathBuf,
        /// Injection script (JSON array of {step, target, type, payload}).
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = corpus::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: u64,
        /// Where to write the JSON Lines trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Detect events over a stored trace and check them against a chronology.
    Events {
        path: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        chronology: PathBuf,
    },
    /// Render the model as a DOT graph (solid flows, dashed triggers).
    Diagram {
        path: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Inspect or run the bundled corpus (override with TM_CORPUS_DIR).
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// Names of the bundled entries.
    List,
    /// Element counts, scripts, and scenario outcomes of one entry.
    Show { name: String },
    /// Run the scenario matrix; all bundled entries when no name is given.
    Run { name: Option<String> },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}

const OK: ExitCode = ExitCode::SUCCESS;
const FINDINGS: ExitCode = ExitCode::FAILURE;

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Validate { path, format } => cmd_validate(&path, format),
        Command::Simulate { path, script, seed, max_steps, trace } => {
            cmd_simulate(&path, &script, seed, max_steps, trace.as_deref())
        }
        Command::Events { path, trace, chronology } => cmd_events(&path, &trace, &chronology),
        Command::Diagram { path, output } => cmd_diagram(&path, output.as_deref()),
        Command::Corpus { action } => cmd_corpus(action),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("could not read {}: {e}", path.display()))
}

/// Parse a model from `.tm` text or a `.json` document.
fn load_model(path: &Path) -> anyhow::Result<Result<Model, Vec<Diagnostic>>> {
    let text = read(path)?;
    if path.extension().is_some_and(|ext| ext == "json") {
        Ok(dsl::from_json(&text))
    } else {
        Ok(dsl::parse_model(&text))
    }
}

fn print_diagnostics(diags: &[Diagnostic], format: Format) {
    match format {
        Format::Text => {
            for diag in diags {
                eprintln!("{diag}");
            }
        }
        Format::Json => {
            println!("{}", serde_json::to_string(diags).expect("diagnostics serialize"));
        }
    }
}

fn cmd_validate(path: &Path, format: Format) -> anyhow::Result<ExitCode> {
    let diags = match load_model(path)? {
        Ok(model) => tm_core::validate::validate(&model),
        Err(diags) => diags,
    };
    let errors = diags.iter().filter(|d| d.is_error()).count();
    let warnings = diags.len() - errors;
    print_diagnostics(&diags, format);
    if format == Format::Text {
        println!(
            "{}: {errors} error(s), {warnings} warning(s)",
            if errors == 0 { "accepted" } else { "rejected" }
        );
    }
    Ok(if errors == 0 { OK } else { FINDINGS })
}

fn cmd_simulate(
    path: &Path,
    script_path: &Path,
    seed: u64,
    max_steps: u64,
    trace_out: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let model = match load_model(path)? {
        Ok(model) => model,
        Err(diags) => {
            print_diagnostics(&diags, Format::Text);
            return Ok(FINDINGS);
        }
    };
    let script = Script::from_json(&read(script_path)?)
        .map_err(|e| anyhow::anyhow!("bad script {}: {e}", script_path.display()))?;
    let config = SimConfig::new(max_steps, seed, corpus::registry());
    let trace = match simulate(&model, &script, &config) {
        Ok(trace) => trace,
        Err(SimError::Script(e)) => {
            return Err(anyhow::anyhow!("bad script {}: {e}", script_path.display()))
        }
        Err(SimError::ModelNotValid(diags)) => {
            print_diagnostics(&diags, Format::Text);
            return Ok(FINDINGS);
        }
        Err(error) => {
            eprintln!("{error}");
            return Ok(FINDINGS);
        }
    };
    if let Some(out) = trace_out {
        std::fs::write(out, trace.to_jsonl())
            .map_err(|e| anyhow::anyhow!("could not write {}: {e}", out.display()))?;
    }
    print_summary(&trace);
    Ok(OK)
}

fn print_summary(trace: &Trace) {
    let steps = trace.records.last().map(|r| r.step + 1).unwrap_or(0);
    let mut things = std::collections::BTreeSet::new();
    let mut refused = 0;
    let mut events = Vec::new();
    for record in &trace.records {
        if let Some(thing) = record.thing {
            things.insert(thing);
        }
        match record.kind {
            RecordKind::RefusedInject => refused += 1,
            RecordKind::Event => events.push(record.element.clone()),
            _ => {}
        }
    }
    println!("steps: {steps}");
    println!("things: {}", things.len());
    println!("refused: {refused}");
    println!("events: {}", events.join(" "));
}

fn cmd_events(path: &Path, trace_path: &Path, chronology_path: &Path) -> anyhow::Result<ExitCode> {
    let model = match load_model(path)? {
        Ok(model) => model,
        Err(diags) => {
            print_diagnostics(&diags, Format::Text);
            return Ok(FINDINGS);
        }
    };
    let trace = Trace::from_jsonl(&read(trace_path)?)
        .map_err(|e| anyhow::anyhow!("bad trace {}: {e}", trace_path.display()))?;
    let chronology = Chronology::from_json(&read(chronology_path)?)
        .map_err(|e| anyhow::anyhow!("bad chronology {}: {e}", chronology_path.display()))?;
    let occurrences = detect_events(&model, &model.events, &trace.records);
    if occurrences.is_empty() {
        println!("no occurrences (vacuously conforms)");
        return Ok(OK);
    }
    let listed: Vec<String> = occurrences
        .iter()
        .map(|o| format!("{}@{}", o.event, o.step))
        .collect();
    println!("occurrences: {}", listed.join(" "));
    match check_chronology(&occurrences, &chronology) {
        Conformance::Conforms => {
            println!("conforms ({} occurrences)", occurrences.len());
            Ok(OK)
        }
        Conformance::Violation { index, prev, at, .. } => {
            println!(
                "violation at index {index}: ({}, {at}) at step {}",
                prev.unwrap_or_else(|| "-".to_string()),
                occurrences[index].step
            );
            Ok(FINDINGS)
        }
    }
}

fn cmd_diagram(path: &Path, output: Option<&Path>) -> anyhow::Result<ExitCode> {
    let model = match load_model(path)? {
        Ok(model) => model,
        Err(diags) => {
            print_diagnostics(&diags, Format::Text);
            return Ok(FINDINGS);
        }
    };
    let rendered = dot::to_dot(&model);
    match output {
        Some(out) => std::fs::write(out, rendered)
            .map_err(|e| anyhow::anyhow!("could not write {}: {e}", out.display()))?,
        None => print!("{rendered}"),
    }
    Ok(OK)
}

fn load_corpus_entry(name: &str) -> anyhow::Result<corpus::CorpusEntry> {
    match std::env::var_os("TM_CORPUS_DIR") {
        Some(dir) => Ok(corpus::load_from_dir(Path::new(&dir), name)?),
        None => Ok(corpus::load(name)?),
    }
}

fn cmd_corpus(action: CorpusAction) -> anyhow::Result<ExitCode> {
    match action {
        CorpusAction::List => {
            for name in corpus::CORPUS_NAMES {
                println!("{name}");
            }
            Ok(OK)
        }
        CorpusAction::Show { name } => {
            let entry = load_corpus_entry(&name)?;
            let stats = entry.model.stats();
            println!("{name}: {}", serde_json::to_string(&stats)?);
            println!("events: {}", entry.model.events.len());
            for (script_name, script) in &entry.scripts {
                println!("script {script_name}: {} injections", script.injections.len());
            }
            for scenario in corpus::scenario_matrix(&name)? {
                println!("scenario {}: {}", scenario.script, scenario.outcome);
            }
            Ok(OK)
        }
        CorpusAction::Run { name } => {
            let names: Vec<String> = match name {
                Some(name) => vec![name],
                None => corpus::CORPUS_NAMES.iter().map(|s| s.to_string()).collect(),
            };
            let mut all_ok = true;
            for name in names {
                all_ok &= run_corpus_entry(&name)?;
            }
            Ok(if all_ok { OK } else { FINDINGS })
        }
    }
}

fn run_corpus_entry(name: &str) -> anyhow::Result<bool> {
    let entry = load_corpus_entry(name)?;
    let config = entry.sim_config();
    let mut all_ok = true;
    for scenario in corpus::scenario_matrix(name)? {
        let Some(script) = entry.script(&scenario.script) else {
            println!("FAIL {name}/{}: script missing", scenario.script);
            all_ok = false;
            continue;
        };
        let trace = match simulate(&entry.model, script, &config) {
            Ok(trace) => trace,
            Err(error) => {
                println!("FAIL {name}/{}: {error}", scenario.script);
                all_ok = false;
                continue;
            }
        };
        let occurrences = {
            let defs = resolve_defs(&entry.model, &entry.events)?;
            detect_events(&entry.model, &defs, &trace.records)
        };
        let ids: Vec<&str> = occurrences.iter().map(|o| o.event.as_str()).collect();
        let refused = trace
            .records
            .iter()
            .filter(|r| r.kind == RecordKind::RefusedInject)
            .count();
        let mut problems = Vec::new();
        for required in &scenario.expect.required {
            if !ids.contains(&required.as_str()) {
                problems.push(format!("missing {required}"));
            }
        }
        for forbidden in &scenario.expect.forbidden {
            if ids.contains(&forbidden.as_str()) {
                problems.push(format!("unexpected {forbidden}"));
            }
        }
        if refused != scenario.expect.refused {
            problems.push(format!("refused {} != {}", refused, scenario.expect.refused));
        }
        if scenario.expect.conforms && !check_chronology(&occurrences, &entry.chronology).conforms() {
            problems.push("chronology violation".to_string());
        }
        if problems.is_empty() {
            println!("PASS {name}/{}: {}", scenario.script, scenario.outcome);
        } else {
            println!("FAIL {name}/{}: {}", scenario.script, problems.join(", "));
            all_ok = false;
        }
    }
    Ok(all_ok)
}
