//! Behavioral checks for every corpus scenario: expected events present,
//! forbidden ones absent, refusal counts exact, and occurrence lists
//! conforming to the entry's chronology.

use tm_core::corpus::{self, CORPUS_NAMES};
use tm_core::events::{check_chronology, detect_events, resolve_defs, EventOccurrence};
use tm_core::sim::{simulate, RecordKind, Trace};

fn occurrences_of(trace: &Trace) -> Vec<EventOccurrence> {
    trace
        .records
        .iter()
        .filter(|r| r.kind == RecordKind::Event)
        .map(|r| EventOccurrence { event: r.element.clone(), step: r.step, thing: r.thing })
        .collect()
}

#[test]
fn every_scenario_meets_its_expectation() {
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        let config = entry.sim_config();
        for scenario in corpus::scenario_matrix(name).unwrap() {
            let script = entry
                .script(&scenario.script)
                .unwrap_or_else(|| panic!("{name}: missing script {}", scenario.script));
            let trace = simulate(&entry.model, script, &config)
                .unwrap_or_else(|e| panic!("{name}/{}: {e}", scenario.script));
            let occs = occurrences_of(&trace);
            let ids: Vec<&str> = occs.iter().map(|o| o.event.as_str()).collect();
            for required in &scenario.expect.required {
                assert!(
                    ids.contains(&required.as_str()),
                    "{name}/{}: expected {required} to occur, got {ids:?}",
                    scenario.script
                );
            }
            for forbidden in &scenario.expect.forbidden {
                assert!(
                    !ids.contains(&forbidden.as_str()),
                    "{name}/{}: {forbidden} must not occur, got {ids:?}",
                    scenario.script
                );
            }
            let refused = trace
                .records
                .iter()
                .filter(|r| r.kind == RecordKind::RefusedInject)
                .count();
            assert_eq!(
                refused, scenario.expect.refused,
                "{name}/{}: refused-inject count",
                scenario.script
            );
            if scenario.expect.conforms {
                let verdict = check_chronology(&occs, &entry.chronology);
                assert!(
                    verdict.conforms(),
                    "{name}/{}: occurrence list violates the chronology: {verdict:?}\n{ids:?}",
                    scenario.script
                );
            }
            assert!(trace.check_internal_order().is_ok(), "{name}/{}", scenario.script);
        }
    }
}

#[test]
fn trace_terminates_before_step_budget() {
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        let config = entry.sim_config();
        for (script_name, script) in &entry.scripts {
            let trace = simulate(&entry.model, script, &config).unwrap();
            let last = trace.records.last().map(|r| r.step).unwrap_or(0);
            assert!(
                last + 1 < config.max_steps,
                "{name}/{script_name}: run used the whole step budget (ends at {last})"
            );
        }
    }
}

#[test]
fn standalone_detection_agrees_with_embedded_records() {
    // re-running detection over a stored trace reproduces exactly the event
    // records the engine embedded while simulating
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        let config = entry.sim_config();
        let defs = resolve_defs(&entry.model, &entry.events).unwrap();
        for (script_name, script) in &entry.scripts {
            let trace = simulate(&entry.model, script, &config).unwrap();
            let embedded = occurrences_of(&trace);
            let redetected = detect_events(&entry.model, &defs, &trace.records);
            assert_eq!(
                embedded, redetected,
                "{name}/{script_name}: detection over the stored trace diverged"
            );
        }
    }
}

#[test]
fn occurrences_of_one_event_strictly_increase_in_time() {
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        let config = entry.sim_config();
        for (script_name, script) in &entry.scripts {
            let trace = simulate(&entry.model, script, &config).unwrap();
            let mut last: std::collections::HashMap<String, u64> = Default::default();
            for occ in occurrences_of(&trace) {
                if let Some(&prev) = last.get(&occ.event) {
                    assert!(
                        occ.step > prev,
                        "{name}/{script_name}: {} re-occurred within step {prev}",
                        occ.event
                    );
                }
                last.insert(occ.event, occ.step);
            }
        }
    }
}

#[test]
fn queue_ring_occupancy_stays_in_bounds() {
    // replay store writes: 0 <= (rear - front) mod n <= n - 1 after every write
    let entry = corpus::load("queue").unwrap();
    let config = entry.sim_config();
    for (script_name, script) in &entry.scripts {
        let trace = simulate(&entry.model, script, &config).unwrap();
        let (mut rear, mut front) = (0i64, 0i64);
        let n = 4i64;
        for record in &trace.records {
            if record.kind != RecordKind::StoreWrite {
                continue;
            }
            match record.element.as_str() {
                "Queue.rear" => rear = record.after.as_int().unwrap(),
                "Queue.front" => front = record.after.as_int().unwrap(),
                _ => continue,
            }
            let occupancy = (rear - front).rem_euclid(n);
            assert!(
                (0..n).contains(&occupancy),
                "{script_name}: occupancy {occupancy} out of range"
            );
        }
    }
}

#[test]
fn no_inject_succeeds_into_a_blocked_queue() {
    let entry = corpus::load("queue").unwrap();
    let config = entry.sim_config();
    for (script_name, script) in &entry.scripts {
        let trace = simulate(&entry.model, script, &config).unwrap();
        let mut blocked = false;
        for record in &trace.records {
            match record.kind {
                RecordKind::StoreWrite if record.element == "Queue.blocked" => {
                    blocked = record.after == tm_core::Value::Bool(true);
                }
                RecordKind::Inject if record.element == "Queue.transfer" => {
                    assert!(!blocked, "{script_name}: inject succeeded while blocked");
                }
                _ => {}
            }
        }
    }
}

#[test]
fn failure_scripts_differ_only_in_payload() {
    // the model is the constant, the script is the experiment
    for name in CORPUS_NAMES {
        let entry = corpus::load(name).unwrap();
        if entry.scripts.len() < 2 {
            panic!("{name}: needs a success and a failure script");
        }
        if name == "queue" {
            continue; // queue scenarios vary arrival patterns on purpose
        }
        let (_, success) = &entry.scripts[0];
        let (_, failure) = &entry.scripts[1];
        assert_eq!(success.injections.len(), failure.injections.len());
        for (a, b) in success.injections.iter().zip(&failure.injections) {
            assert_eq!(a.step, b.step, "{name}: timing differs");
            assert_eq!(a.target, b.target, "{name}: target differs");
            assert_eq!(a.thing_type, b.thing_type, "{name}: type differs");
        }
        assert_ne!(
            success.injections.iter().map(|i| &i.payload).collect::<Vec<_>>(),
            failure.injections.iter().map(|i| &i.payload).collect::<Vec<_>>(),
            "{name}: failure script must change some payload"
        );
    }
}
