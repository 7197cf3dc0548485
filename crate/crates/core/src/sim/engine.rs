//! The deterministic token-flow engine.
//!
//! Each step runs four phases:
//!
//! 1. script injections due this step (bounced with a refused-inject record
//!    when the target transfer's machine has a bool store `blocked` = true);
//! 2. free flow to a fixpoint — things move along the first eligible arc in
//!    declaration order, resting at stages that some trigger targets (those
//!    hold things until activated) and at stages with no eligible arc;
//! 3. triggers, in declaration order, each evaluated at most once per step:
//!    first the ones whose source fired in phases 1–2 (or in the trigger
//!    phase of the previous step), then the ones enabled by that first pass;
//!    anything fired by the second pass carries over to the next step.
//!    Activating a create stage makes a new thing (inheriting the firing
//!    thing's payload, typed by the stage tag); activating any other stage
//!    releases the oldest resting thing there along its first eligible arc;
//! 4. event detection over this step's records.
//!
//! A thing arriving at a transfer stage with no outgoing arc departs the
//! system; its arrival record is its departure. The run stops at `max_steps`
//! or as soon as a step produces no record, no script entry remains, and no
//! trigger carry-over is pending.

use std::collections::{HashMap, VecDeque};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::diag::Diagnostic;
use crate::events::EventDetector;
use crate::expr::EvalCtx;
use crate::model::{Model, StageId, StageKind, StoreId, TriggerId};
use crate::value::Value;

use super::fns::{FnCtx, FnRegistry, StoreView};
use super::script::{Script, ScriptError};
use super::trace::{RecordKind, Trace, TraceRecord};

/// Micro-movement budget per step; exceeding it means the model has a flow
/// loop with no place to rest.
pub const MICRO_STEP_CAP: u32 = 10_000;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub max_steps: u64,
    pub seed: u64,
    pub registry: FnRegistry,
}

impl SimConfig {
    pub fn new(max_steps: u64, seed: u64, registry: FnRegistry) -> Self {
        SimConfig { max_steps, seed, registry }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("model has validation errors; refusing to simulate")]
    ModelNotValid(Vec<Diagnostic>),
    #[error("E-FN-MISSING: stage {stage} names unregistered function {name:?}")]
    FnMissing { stage: String, name: String },
    #[error("E-FN-APPLY: {name:?} at {stage}: {message}")]
    FnApply { stage: String, name: String, message: String },
    #[error("E-GUARD-EVAL: guard of {trigger}: {message}")]
    GuardEval { trigger: String, message: String },
    #[error("E-DIVERGENT: step {step} exceeded {MICRO_STEP_CAP} micro-steps; the model flows in a loop without rest")]
    Divergent { step: u64 },
    #[error(transparent)]
    Script(#[from] ScriptError),
}

/// A token: identity, type, payload, and where it currently rests.
#[derive(Debug, Clone)]
struct ThingState {
    ty: String,
    payload: Value,
    /// `None` once the thing has departed through a boundary transfer.
    at: Option<StageId>,
}

pub fn simulate(model: &Model, script: &Script, config: &SimConfig) -> Result<Trace, SimError> {
    let diags = crate::validate::validate(model);
    if crate::diag::has_errors(&diags) {
        return Err(SimError::ModelNotValid(
            diags.into_iter().filter(|d| d.is_error()).collect(),
        ));
    }
    for id in model.stage_ids() {
        let stage = model.stage(id);
        if !matches!(stage.kind, StageKind::Create | StageKind::Process) {
            continue;
        }
        if let Some(name) = &stage.fn_name {
            if !config.registry.contains(name) {
                return Err(SimError::FnMissing { stage: stage.path.clone(), name: name.clone() });
            }
        }
    }
    let targets = script.resolve(model)?;

    let mut engine = Engine {
        model,
        registry: &config.registry,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        store_values: model.stores.iter().map(|s| s.initial.clone()).collect(),
        things: Vec::new(),
        resting: vec![VecDeque::new(); model.stages.len()],
        records: Vec::new(),
        marks: HashMap::new(),
        micro: 0,
        step: 0,
    };
    let mut detector = EventDetector::new(model, &model.events);
    let mut carryover: HashMap<StageId, u64> = HashMap::new();
    let mut script_idx = 0;

    for step in 0..config.max_steps {
        engine.step = step;
        engine.micro = 0;
        engine.marks.clear();
        let step_start = engine.records.len();

        // phase 1: injections due this step
        while script_idx < script.injections.len() && script.injections[script_idx].step <= step {
            let injection = &script.injections[script_idx];
            let target = targets[script_idx];
            script_idx += 1;
            if injection.step < step {
                continue; // target step already passed (cannot happen from step 0)
            }
            engine.inject(target, injection.thing_type.clone(), injection.payload.clone())?;
        }

        // phase 2: free flow to fixpoint
        engine.flow_fixpoint()?;

        // phase 3: triggers, two passes
        let mut level0 = std::mem::take(&mut engine.marks);
        for (&stage, &thing) in &carryover {
            level0.entry(stage).or_insert(thing);
        }
        carryover.clear();
        let mut evaluated: Vec<bool> = vec![false; model.triggers.len()];

        engine.marks = HashMap::new();
        engine.trigger_pass(&level0, None, &mut evaluated)?;
        let level1 = std::mem::take(&mut engine.marks);

        engine.marks = HashMap::new();
        engine.trigger_pass(&level0, Some(&level1), &mut evaluated)?;
        carryover = std::mem::take(&mut engine.marks);

        // phase 4: event detection over this step's records
        for record in &engine.records[step_start..] {
            detector.feed(record);
        }
        for occurrence in detector.take_batch() {
            engine.records.push(TraceRecord::new(
                occurrence.step,
                RecordKind::Event,
                occurrence.event,
                occurrence.thing,
                Value::Null,
                Value::Null,
            ));
        }

        let quiet = engine.records.len() == step_start
            && script_idx >= script.injections.len()
            && carryover.is_empty();
        if quiet {
            break;
        }
    }

    Ok(Trace { records: engine.records })
}

struct Engine<'a> {
    model: &'a Model,
    registry: &'a FnRegistry,
    rng: ChaCha8Rng,
    store_values: Vec<Value>,
    things: Vec<ThingState>,
    resting: Vec<VecDeque<u64>>,
    records: Vec<TraceRecord>,
    /// Stages fired in the current phase, with the last firing thing.
    marks: HashMap<StageId, u64>,
    micro: u32,
    step: u64,
}

impl<'a> Engine<'a> {
    fn record(&mut self, kind: RecordKind, element: String, thing: Option<u64>, before: Value, after: Value) {
        self.records
            .push(TraceRecord::new(self.step, kind, element, thing, before, after));
    }

    fn mark(&mut self, stage: StageId, thing: u64) {
        self.marks.insert(stage, thing);
    }

    fn alloc_thing(&mut self, ty: String, payload: Value, at: StageId) -> u64 {
        let id = self.things.len() as u64;
        self.things.push(ThingState { ty, payload, at: Some(at) });
        self.resting[at.0 as usize].push_back(id);
        id
    }

    fn inject(&mut self, target: StageId, ty: String, payload: Value) -> Result<(), SimError> {
        let stage = self.model.stage(target);
        if stage.kind == StageKind::Transfer {
            let owner = self.model.machine(stage.owner);
            let blocked = owner.stores.iter().any(|&s| {
                self.model.store(s).name == "blocked"
                    && self.store_values[s.0 as usize] == Value::Bool(true)
            });
            if blocked {
                self.record(
                    RecordKind::RefusedInject,
                    stage.path.clone(),
                    None,
                    Value::Null,
                    payload,
                );
                return Ok(());
            }
        }
        let id = self.alloc_thing(ty, payload.clone(), target);
        self.record(RecordKind::Inject, stage.path.clone(), Some(id), Value::Null, payload);
        self.mark(target, id);
        if stage.kind == StageKind::Create && stage.fn_name.is_some() {
            self.apply_fn(id, target)?;
        }
        Ok(())
    }

    /// First outgoing arc (declaration order) whose label admits the thing.
    fn eligible_arc(&self, thing: u64, from: StageId) -> Option<crate::model::FlowId> {
        let ty = &self.things[thing as usize].ty;
        self.model.flows_from(from).find(|&f| {
            match &self.model.flow(f).carries {
                Some(label) => label == ty,
                None => true,
            }
        })
    }

    /// Move a thing one arc. `force` lets an activation pull a thing out of a
    /// gated stage. Returns whether it moved.
    fn move_once(&mut self, thing: u64, force: bool) -> Result<bool, SimError> {
        let Some(at) = self.things[thing as usize].at else {
            return Ok(false);
        };
        if !force && self.model.is_gated(at) {
            return Ok(false);
        }
        let Some(arc_id) = self.eligible_arc(thing, at) else {
            return Ok(false);
        };
        let dest = self.model.flow(arc_id).to;
        self.micro += 1;
        if self.micro > MICRO_STEP_CAP {
            return Err(SimError::Divergent { step: self.step });
        }
        self.resting[at.0 as usize].retain(|&t| t != thing);
        self.resting[dest.0 as usize].push_back(thing);
        self.things[thing as usize].at = Some(dest);
        self.record(
            RecordKind::FireFlow,
            self.model.flow_path(arc_id),
            Some(thing),
            Value::Null,
            Value::Null,
        );
        self.mark(dest, thing);
        let dest_stage = self.model.stage(dest);
        if matches!(dest_stage.kind, StageKind::Create | StageKind::Process)
            && dest_stage.fn_name.is_some()
        {
            self.apply_fn(thing, dest)?;
        }
        if self.model.is_boundary_exit(dest) {
            self.resting[dest.0 as usize].retain(|&t| t != thing);
            self.things[thing as usize].at = None;
        }
        Ok(true)
    }

    fn move_to_rest(&mut self, thing: u64) -> Result<(), SimError> {
        while self.move_once(thing, false)? {}
        Ok(())
    }

    fn flow_fixpoint(&mut self) -> Result<(), SimError> {
        loop {
            let mut moved = false;
            for thing in 0..self.things.len() as u64 {
                if self.move_once(thing, false)? {
                    moved = true;
                }
            }
            if !moved {
                return Ok(());
            }
        }
    }

    /// One trigger pass: fire every not-yet-evaluated trigger whose source is
    /// in `level0` (or `level1` when given), in declaration order.
    fn trigger_pass(
        &mut self,
        level0: &HashMap<StageId, u64>,
        level1: Option<&HashMap<StageId, u64>>,
        evaluated: &mut [bool],
    ) -> Result<(), SimError> {
        for id in self.model.trigger_ids() {
            if evaluated[id.0 as usize] {
                continue;
            }
            let arc = self.model.trigger(id);
            let firing = match level1 {
                None => level0.get(&arc.from),
                Some(l1) => l1.get(&arc.from).or_else(|| level0.get(&arc.from)),
            };
            let Some(&firing_thing) = firing else {
                continue;
            };
            evaluated[id.0 as usize] = true;
            if let Some(guard) = &arc.guard {
                let payload = self.things[firing_thing as usize].payload.clone();
                let values = &self.store_values;
                let read = |store: StoreId| values[store.0 as usize].clone();
                let ok = guard
                    .eval(&EvalCtx { stores: &read, payload: Some(&payload) })
                    .map_err(|message| SimError::GuardEval {
                        trigger: self.model.trigger_path(id),
                        message,
                    })?;
                if ok != Value::Bool(true) {
                    continue;
                }
            }
            self.record(
                RecordKind::FireTrigger,
                self.model.trigger_path(id),
                Some(firing_thing),
                Value::Null,
                Value::Null,
            );
            self.activate(id, firing_thing)?;
        }
        Ok(())
    }

    fn activate(&mut self, trigger: TriggerId, firing_thing: u64) -> Result<(), SimError> {
        let target = self.model.trigger(trigger).to;
        let stage = self.model.stage(target);
        if stage.kind == StageKind::Create {
            let inherited = self.things[firing_thing as usize].payload.clone();
            let ty = stage.tag.clone().unwrap_or_else(|| "thing".to_string());
            let id = self.alloc_thing(ty, inherited, target);
            if stage.fn_name.is_some() {
                let (after, writes) = self.call_fn(id, target)?;
                self.record(
                    RecordKind::ApplyFn,
                    stage.path.clone(),
                    Some(id),
                    Value::Null,
                    after.clone(),
                );
                self.things[id as usize].payload = after;
                self.apply_writes(writes, id);
            } else {
                let payload = self.things[id as usize].payload.clone();
                self.record(RecordKind::ApplyFn, stage.path.clone(), Some(id), Value::Null, payload);
            }
            self.mark(target, id);
            self.move_to_rest(id)?;
        } else {
            let oldest = self.resting[target.0 as usize].front().copied();
            if let Some(thing) = oldest {
                if self.move_once(thing, true)? {
                    self.move_to_rest(thing)?;
                }
            }
        }
        Ok(())
    }

    /// Run a stage's function and resolve its store writes against the owning
    /// machine; nothing is recorded yet.
    fn call_fn(&mut self, thing: u64, stage_id: StageId) -> Result<(Value, Vec<(StoreId, Value)>), SimError> {
        let stage = self.model.stage(stage_id);
        let name = stage.fn_name.clone().expect("caller checked fn presence");
        let Some(f) = self.registry.get(&name) else {
            return Err(SimError::FnMissing { stage: stage.path.clone(), name });
        };
        let f = f.clone();
        let state = &self.things[thing as usize];
        let mut ctx = FnCtx {
            payload: state.payload.clone(),
            thing_type: state.ty.clone(),
            stage_tag: stage.tag.clone(),
            stores: StoreView {
                model: this_model(self.model),
                owner: stage.owner,
                values: &self.store_values,
            },
            rng: &mut self.rng,
        };
        let outcome = f(&mut ctx).map_err(|message| SimError::FnApply {
            stage: stage.path.clone(),
            name: name.clone(),
            message,
        })?;
        let mut writes = Vec::with_capacity(outcome.writes.len());
        for (store_name, value) in outcome.writes {
            let store = self
                .model
                .machine(stage.owner)
                .stores
                .iter()
                .copied()
                .find(|&s| self.model.store(s).name == store_name)
                .ok_or_else(|| SimError::FnApply {
                    stage: stage.path.clone(),
                    name: name.clone(),
                    message: format!("writes unknown store {store_name:?} (writes are machine-local)"),
                })?;
            if !self.model.store(store).ty.admits(&value) {
                return Err(SimError::FnApply {
                    stage: stage.path.clone(),
                    name: name.clone(),
                    message: format!(
                        "writes {} value into {} store {store_name:?}",
                        value.kind_name(),
                        self.model.store(store).ty
                    ),
                });
            }
            writes.push((store, value));
        }
        Ok((outcome.payload, writes))
    }

    fn apply_writes(&mut self, writes: Vec<(StoreId, Value)>, thing: u64) {
        for (store, value) in writes {
            let before = self.store_values[store.0 as usize].clone();
            self.record(
                RecordKind::StoreWrite,
                self.model.store(store).path.clone(),
                Some(thing),
                before,
                value.clone(),
            );
            self.store_values[store.0 as usize] = value;
        }
    }

    /// Standard application at a stage the thing just entered.
    fn apply_fn(&mut self, thing: u64, stage_id: StageId) -> Result<(), SimError> {
        let before = self.things[thing as usize].payload.clone();
        let (after, writes) = self.call_fn(thing, stage_id)?;
        self.record(
            RecordKind::ApplyFn,
            self.model.stage(stage_id).path.clone(),
            Some(thing),
            before,
            after.clone(),
        );
        self.things[thing as usize].payload = after;
        self.mark(stage_id, thing);
        self.apply_writes(writes, thing);
        Ok(())
    }
}

// lifetime helper: StoreView borrows the model for 'a, the engine holds 'a
fn this_model(model: &Model) -> &Model {
    model
}
