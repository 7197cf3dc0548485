//! Shared test helpers: a seeded generator of valid models with scripts, and
//! an independent trace replay that double-checks the engine's bookkeeping.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use tm_core::model::{Model, ModelBuilder, PendingFlow, PendingTrigger, StageKind};
use tm_core::sim::{Injection, RecordKind, Script, Trace};
use tm_core::value::Value;

fn pick(rng: &mut ChaCha8Rng, bound: usize) -> usize {
    (rng.next_u64() % bound as u64) as usize
}

fn chance(rng: &mut ChaCha8Rng, percent: u64) -> bool {
    rng.next_u64() % 100 < percent
}

/// Generate a valid model (accepted by the validator, acyclic flow graph)
/// plus a random script against it. Deterministic in the seed.
pub fn random_model(seed: u64) -> (Model, Script) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ModelBuilder::new();
    let machine_count = 1 + pick(&mut rng, 3);
    let mut pipelines = Vec::new();

    for i in 0..machine_count {
        let name = format!("M{i}");
        let machine = b.add_machine(&name, None, None);
        // templates keep every stage connected and the arcs inside R1
        let template = pick(&mut rng, 4);
        let mut flows: Vec<(String, String)> = Vec::new();
        let stage_path = |kind: StageKind, tag: Option<&str>| match tag {
            Some(tag) => format!("{name}.{}#{tag}", kind.keyword()),
            None => format!("{name}.{}", kind.keyword()),
        };
        let entrance;
        let exit;
        match template {
            0 => {
                // import, keep: transfer -> receive -> process
                b.add_stage(machine, StageKind::Transfer, None, None, None);
                b.add_stage(machine, StageKind::Receive, None, None, None);
                b.add_stage(machine, StageKind::Process, None, None, None);
                flows.push((stage_path(StageKind::Transfer, None), stage_path(StageKind::Receive, None)));
                flows.push((stage_path(StageKind::Receive, None), stage_path(StageKind::Process, None)));
                entrance = Some(stage_path(StageKind::Transfer, None));
                exit = None;
            }
            1 => {
                // source: create -> release -> transfer out
                b.add_stage(machine, StageKind::Create, None, None, None);
                b.add_stage(machine, StageKind::Release, None, None, None);
                b.add_stage(machine, StageKind::Transfer, Some("out"), None, None);
                flows.push((stage_path(StageKind::Create, None), stage_path(StageKind::Release, None)));
                flows.push((stage_path(StageKind::Release, None), stage_path(StageKind::Transfer, Some("out"))));
                entrance = Some(stage_path(StageKind::Create, None));
                exit = Some(stage_path(StageKind::Transfer, Some("out")));
            }
            2 => {
                // relay: transfer -> receive -> release -> transfer out
                b.add_stage(machine, StageKind::Transfer, None, None, None);
                b.add_stage(machine, StageKind::Receive, None, None, None);
                b.add_stage(machine, StageKind::Release, None, None, None);
                b.add_stage(machine, StageKind::Transfer, Some("out"), None, None);
                flows.push((stage_path(StageKind::Transfer, None), stage_path(StageKind::Receive, None)));
                flows.push((stage_path(StageKind::Receive, None), stage_path(StageKind::Release, None)));
                flows.push((stage_path(StageKind::Release, None), stage_path(StageKind::Transfer, Some("out"))));
                entrance = Some(stage_path(StageKind::Transfer, None));
                exit = Some(stage_path(StageKind::Transfer, Some("out")));
            }
            _ => {
                // worker: transfer -> receive -> process -> release -> transfer out
                b.add_stage(machine, StageKind::Transfer, None, None, None);
                b.add_stage(machine, StageKind::Receive, None, None, None);
                b.add_stage(machine, StageKind::Process, None, None, None);
                b.add_stage(machine, StageKind::Release, None, None, None);
                b.add_stage(machine, StageKind::Transfer, Some("out"), None, None);
                flows.push((stage_path(StageKind::Transfer, None), stage_path(StageKind::Receive, None)));
                flows.push((stage_path(StageKind::Receive, None), stage_path(StageKind::Process, None)));
                flows.push((stage_path(StageKind::Process, None), stage_path(StageKind::Release, None)));
                flows.push((stage_path(StageKind::Release, None), stage_path(StageKind::Transfer, Some("out"))));
                entrance = Some(stage_path(StageKind::Transfer, None));
                exit = Some(stage_path(StageKind::Transfer, Some("out")));
            }
        }
        // an observer create hanging off the pipeline via a trigger
        let has_watch = chance(&mut rng, 40);
        if has_watch {
            b.add_stage(machine, StageKind::Create, Some("watch"), None, None);
        }
        for (from, to) in &flows {
            b.add_flow(PendingFlow { from: from.clone(), to: to.clone(), carries: None, span: None });
        }
        pipelines.push((name, entrance, exit, flows, has_watch));
    }

    // chain exits to downstream entrances (higher index only: stays acyclic)
    for i in 0..machine_count {
        let Some(exit) = pipelines[i].2.clone() else { continue };
        let candidates: Vec<String> = pipelines[i + 1..]
            .iter()
            .filter_map(|(_, entrance, _, _, _)| entrance.clone())
            .filter(|p| p.contains(".transfer"))
            .collect();
        if !candidates.is_empty() && chance(&mut rng, 70) {
            let to = candidates[pick(&mut rng, candidates.len())].clone();
            b.add_flow(PendingFlow { from: exit, to, carries: None, span: None });
        }
    }

    // every observer create is fed by a trigger from its own pipeline
    for (name, _, _, flows, has_watch) in &pipelines {
        if !has_watch {
            continue;
        }
        let source = flows[pick(&mut rng, flows.len())].1.clone();
        b.add_trigger(PendingTrigger {
            from: source,
            to: format!("{name}.create#watch"),
            guard: None,
            span: None,
        });
    }

    // some pipelines gate their release: each arrival at the entrance pulls
    // the oldest waiting thing onward
    for (name, entrance, _, flows, _) in &pipelines {
        let has_release = flows.iter().any(|(_, to)| to.ends_with(".release"));
        if !has_release || !chance(&mut rng, 50) {
            continue;
        }
        if let Some(entrance) = entrance {
            b.add_trigger(PendingTrigger {
                from: entrance.clone(),
                to: format!("{name}.release"),
                guard: None,
                span: None,
            });
        }
    }

    let model = match b.finish() {
        Ok(model) => model,
        Err(diags) => {
            // observer creates without a trigger are orphans; retry without them
            // by rebuilding is overkill — the templates guarantee this only
            // happens for the watch stage, so prune it structurally
            panic!("generator produced an invalid model (seed {seed}): {diags:?}")
        }
    };

    // a script over the model's transfer/create entry points
    let injectable: Vec<String> = model
        .stage_ids()
        .filter(|&s| {
            matches!(model.stage(s).kind, StageKind::Transfer | StageKind::Create)
                && model.flows_into(s).next().is_none()
        })
        .map(|s| model.stage(s).path.clone())
        .collect();
    let mut injections = Vec::new();
    if !injectable.is_empty() {
        let count = 1 + pick(&mut rng, 6);
        let mut steps: Vec<u64> = (0..count).map(|_| rng.next_u64() % 12).collect();
        steps.sort();
        for step in steps {
            let target = injectable[pick(&mut rng, injectable.len())].clone();
            injections.push(Injection {
                step,
                target,
                thing_type: "t".to_string(),
                payload: Value::Int((rng.next_u64() % 100) as i64),
            });
        }
    }
    let script = Script::new(injections).expect("steps were sorted");
    (model, script)
}

/// Independent replay of a trace against its model: every movement uses an
/// arc that exists and starts where the thing actually is, births precede
/// uses, departures happen exactly at boundary transfers, and the ledger
/// `injected + created - departed = resident` balances after every step.
pub fn replay_conservation(model: &Model, trace: &Trace) -> Result<(), String> {
    #[derive(PartialEq)]
    enum Where {
        At(String),
        Departed,
    }
    let mut position: HashMap<u64, Where> = HashMap::new();
    let mut injected = 0i64;
    let mut created = 0i64;
    let mut departed = 0i64;
    let mut current_step = 0;

    let arc_exists = |element: &str| -> Option<(String, String)> {
        let (from, to) = element.split_once("->")?;
        let from_id = model.lookup_stage(from).ok()?;
        let to_id = model.lookup_stage(to).ok()?;
        model
            .flow_ids()
            .find(|&f| model.flow(f).from == from_id && model.flow(f).to == to_id)?;
        Some((from.to_string(), to.to_string()))
    };
    let is_boundary = |stage_path: &str| -> bool {
        model
            .lookup_stage(stage_path)
            .map(|s| model.is_boundary_exit(s))
            .unwrap_or(false)
    };

    let check_ledger = |injected: i64, created: i64, departed: i64, position: &HashMap<u64, Where>, step: u64| {
        let resident = position.values().filter(|w| !matches!(w, Where::Departed)).count() as i64;
        if injected + created - departed != resident {
            return Err(format!(
                "step {step}: ledger {injected} + {created} - {departed} != resident {resident}"
            ));
        }
        Ok(())
    };

    for record in &trace.records {
        if record.step != current_step {
            check_ledger(injected, created, departed, &position, current_step)?;
            current_step = record.step;
        }
        match record.kind {
            RecordKind::Inject => {
                let thing = record.thing.ok_or("inject without thing id")?;
                if position.contains_key(&thing) {
                    return Err(format!("thing {thing} injected twice"));
                }
                injected += 1;
                position.insert(thing, Where::At(record.element.clone()));
            }
            RecordKind::RefusedInject => {
                if record.thing.is_some() {
                    return Err("refused inject carries a thing id".to_string());
                }
            }
            RecordKind::ApplyFn => {
                let thing = record.thing.ok_or("apply-fn without thing id")?;
                position.entry(thing).or_insert_with(|| {
                    created += 1;
                    Where::At(record.element.clone())
                });
            }
            RecordKind::FireFlow => {
                let thing = record.thing.ok_or("fire-flow without thing id")?;
                let (from, to) =
                    arc_exists(&record.element).ok_or_else(|| format!("no arc {}", record.element))?;
                match position.get(&thing) {
                    Some(Where::At(at)) if *at == from => {}
                    Some(Where::At(at)) => {
                        return Err(format!(
                            "thing {thing} moved along {} but was at {at}",
                            record.element
                        ))
                    }
                    Some(Where::Departed) => {
                        return Err(format!("thing {thing} moved after departing"))
                    }
                    None => return Err(format!("thing {thing} moved before existing")),
                }
                if is_boundary(&to) {
                    departed += 1;
                    position.insert(thing, Where::Departed);
                } else {
                    position.insert(thing, Where::At(to));
                }
            }
            RecordKind::FireTrigger | RecordKind::StoreWrite | RecordKind::Event => {}
        }
    }
    check_ledger(injected, created, departed, &position, current_step)
}
