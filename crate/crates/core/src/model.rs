//! Static model graph: machines, stages, arcs, stores, and event definitions.
//!
//! A `Model` is immutable once built. Construction goes through
//! [`ModelBuilder`], which enforces identifier uniqueness and resolves every
//! path reference; a builder that reports errors never yields a model.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diag::{Diagnostic, SourceSpan};
use crate::expr::Expr;
use crate::value::Value;

/// The five generic stage kinds. No other kind is representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Create,
    Process,
    Release,
    Transfer,
    Receive,
}

impl StageKind {
    pub const ALL: [StageKind; 5] = [
        StageKind::Create,
        StageKind::Process,
        StageKind::Release,
        StageKind::Transfer,
        StageKind::Receive,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            StageKind::Create => "create",
            StageKind::Process => "process",
            StageKind::Release => "release",
            StageKind::Transfer => "transfer",
            StageKind::Receive => "receive",
        }
    }

    pub fn from_keyword(word: &str) -> Option<StageKind> {
        match word {
            "create" => Some(StageKind::Create),
            "process" => Some(StageKind::Process),
            "release" => Some(StageKind::Release),
            "transfer" => Some(StageKind::Transfer),
            "receive" => Some(StageKind::Receive),
            _ => None,
        }
    }

    /// Canonical ordering used when emitting text: create, process, release,
    /// transfer, receive.
    pub fn order(self) -> usize {
        match self {
            StageKind::Create => 0,
            StageKind::Process => 1,
            StageKind::Release => 2,
            StageKind::Transfer => 3,
            StageKind::Receive => 4,
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MachineId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StageId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriggerId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StoreId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    pub name: String,
    pub parent: Option<MachineId>,
    /// Full dotted path from the root, e.g. `SA.Phone`.
    pub path: String,
    pub stages: Vec<StageId>,
    pub submachines: Vec<MachineId>,
    pub stores: Vec<StoreId>,
    pub span: Option<SourceSpan>,
    pub decl_idx: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub kind: StageKind,
    pub tag: Option<String>,
    pub owner: MachineId,
    /// Processing-function name; meaningful for create and process stages.
    pub fn_name: Option<String>,
    /// Cached canonical path, e.g. `Queue.create#rear`.
    pub path: String,
    pub span: Option<SourceSpan>,
    pub decl_idx: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowArc {
    pub from: StageId,
    pub to: StageId,
    /// Thing type the arc carries; an unlabeled arc carries anything.
    pub carries: Option<String>,
    pub span: Option<SourceSpan>,
    pub decl_idx: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerArc {
    pub from: StageId,
    pub to: StageId,
    pub guard: Option<Expr>,
    pub span: Option<SourceSpan>,
    pub decl_idx: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreTy {
    Int,
    Bool,
    String,
}

impl StoreTy {
    pub fn keyword(self) -> &'static str {
        match self {
            StoreTy::Int => "int",
            StoreTy::Bool => "bool",
            StoreTy::String => "string",
        }
    }

    pub fn admits(self, value: &Value) -> bool {
        matches!(
            (self, value),
            (StoreTy::Int, Value::Int(_))
                | (StoreTy::Bool, Value::Bool(_))
                | (StoreTy::String, Value::Str(_))
        )
    }
}

impl fmt::Display for StoreTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    pub name: String,
    pub owner: MachineId,
    pub ty: StoreTy,
    pub initial: Value,
    /// Cached `Machine.store` path.
    pub path: String,
    pub span: Option<SourceSpan>,
    pub decl_idx: u32,
}

/// A region element: a stage or a flow arc of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementRef {
    Stage(StageId),
    Flow(FlowId),
}

/// An event definition: a named region of model elements plus the anchor
/// element whose firing completes an occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDef {
    pub id: String,
    pub label: Option<String>,
    pub region: Vec<ElementRef>,
    pub anchor: ElementRef,
    pub span: Option<SourceSpan>,
    pub decl_idx: u32,
}

/// Element counts of a model; stable across serialization round trips.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub machines: usize,
    pub stages: BTreeMap<String, usize>,
    pub flows: usize,
    pub triggers: usize,
    pub stores: usize,
}

/// The immutable model graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub machines: Vec<Machine>,
    pub stages: Vec<Stage>,
    pub flows: Vec<FlowArc>,
    pub triggers: Vec<TriggerArc>,
    pub stores: Vec<Store>,
    pub events: Vec<EventDef>,
    pub roots: Vec<MachineId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LookupError {
    #[error("E-UNRESOLVED: no stage at {0}")]
    NotFound(String),
    #[error("E-AMBIGUOUS: {0} matches more than one stage; add a #tag")]
    Ambiguous(String),
}

impl Model {
    pub fn machine(&self, id: MachineId) -> &Machine {
        &self.machines[id.0 as usize]
    }

    pub fn stage(&self, id: StageId) -> &Stage {
        &self.stages[id.0 as usize]
    }

    pub fn flow(&self, id: FlowId) -> &FlowArc {
        &self.flows[id.0 as usize]
    }

    pub fn trigger(&self, id: TriggerId) -> &TriggerArc {
        &self.triggers[id.0 as usize]
    }

    pub fn store(&self, id: StoreId) -> &Store {
        &self.stores[id.0 as usize]
    }

    pub fn stage_ids(&self) -> impl Iterator<Item = StageId> {
        (0..self.stages.len() as u32).map(StageId)
    }

    pub fn flow_ids(&self) -> impl Iterator<Item = FlowId> {
        (0..self.flows.len() as u32).map(FlowId)
    }

    pub fn trigger_ids(&self) -> impl Iterator<Item = TriggerId> {
        (0..self.triggers.len() as u32).map(TriggerId)
    }

    pub fn store_ids(&self) -> impl Iterator<Item = StoreId> {
        (0..self.stores.len() as u32).map(StoreId)
    }

    /// Canonical element string of a flow arc: `from->to`.
    pub fn flow_path(&self, id: FlowId) -> String {
        let arc = self.flow(id);
        format!("{}->{}", self.stage(arc.from).path, self.stage(arc.to).path)
    }

    /// Canonical element string of a trigger arc: `from=>to`.
    pub fn trigger_path(&self, id: TriggerId) -> String {
        let arc = self.trigger(id);
        format!("{}=>{}", self.stage(arc.from).path, self.stage(arc.to).path)
    }

    pub fn element_path(&self, elem: ElementRef) -> String {
        match elem {
            ElementRef::Stage(id) => self.stage(id).path.clone(),
            ElementRef::Flow(id) => self.flow_path(id),
        }
    }

    /// Find a machine by its full dotted path.
    pub fn machine_by_path(&self, path: &str) -> Option<MachineId> {
        self.machines
            .iter()
            .position(|m| m.path == path)
            .map(|i| MachineId(i as u32))
    }

    /// Resolve a stage path of the form `Machine.Sub.kind[#tag]`.
    ///
    /// A path without a `#tag` resolves to the untagged stage of that kind
    /// when one exists, otherwise to the single tagged stage of that kind;
    /// two or more candidates without an untagged winner are ambiguous.
    pub fn lookup_stage(&self, path: &str) -> Result<StageId, LookupError> {
        let (machine_part, kind, tag) = match split_stage_path(path) {
            Some(parts) => parts,
            None => return Err(LookupError::NotFound(path.to_string())),
        };
        let machine = self
            .machine_by_path(&machine_part)
            .ok_or_else(|| LookupError::NotFound(path.to_string()))?;
        let candidates: Vec<StageId> = self.machine(machine)
            .stages
            .iter()
            .copied()
            .filter(|&s| self.stage(s).kind == kind)
            .collect();
        match tag {
            Some(tag) => candidates
                .into_iter()
                .find(|&s| self.stage(s).tag.as_deref() == Some(tag.as_str()))
                .ok_or_else(|| LookupError::NotFound(path.to_string())),
            None => {
                if let Some(&exact) = candidates
                    .iter()
                    .find(|&&s| self.stage(s).tag.is_none())
                {
                    Ok(exact)
                } else if candidates.len() == 1 {
                    Ok(candidates[0])
                } else if candidates.is_empty() {
                    Err(LookupError::NotFound(path.to_string()))
                } else {
                    Err(LookupError::Ambiguous(path.to_string()))
                }
            }
        }
    }

    /// Resolve a `Machine.store` path, or a bare store name when it is unique
    /// model-wide.
    pub fn lookup_store(&self, reference: &str) -> Result<StoreId, LookupError> {
        if let Some((machine_part, name)) = reference.rsplit_once('.') {
            if let Some(machine) = self.machine_by_path(machine_part) {
                if let Some(&id) = self
                    .machine(machine)
                    .stores
                    .iter()
                    .find(|&&s| self.store(s).name == name)
                {
                    return Ok(id);
                }
            }
            return Err(LookupError::NotFound(reference.to_string()));
        }
        let matches: Vec<StoreId> = self
            .store_ids()
            .filter(|&s| self.store(s).name == reference)
            .collect();
        match matches.len() {
            0 => Err(LookupError::NotFound(reference.to_string())),
            1 => Ok(matches[0]),
            _ => Err(LookupError::Ambiguous(reference.to_string())),
        }
    }

    /// Canonical reference for a store in emitted text: bare name when unique,
    /// otherwise qualified by the owning machine path.
    pub fn store_reference(&self, id: StoreId) -> String {
        let store = self.store(id);
        let unique = self
            .stores
            .iter()
            .filter(|s| s.name == store.name)
            .count()
            == 1;
        if unique {
            store.name.clone()
        } else {
            store.path.clone()
        }
    }

    /// Outgoing flow arcs of a stage, in declaration order.
    pub fn flows_from(&self, stage: StageId) -> impl Iterator<Item = FlowId> + '_ {
        self.flow_ids().filter(move |&f| self.flow(f).from == stage)
    }

    /// Incoming flow arcs of a stage, in declaration order.
    pub fn flows_into(&self, stage: StageId) -> impl Iterator<Item = FlowId> + '_ {
        self.flow_ids().filter(move |&f| self.flow(f).to == stage)
    }

    pub fn triggers_into(&self, stage: StageId) -> impl Iterator<Item = TriggerId> + '_ {
        self.trigger_ids().filter(move |&t| self.trigger(t).to == stage)
    }

    pub fn triggers_from(&self, stage: StageId) -> impl Iterator<Item = TriggerId> + '_ {
        self.trigger_ids().filter(move |&t| self.trigger(t).from == stage)
    }

    /// A stage holds things (rather than letting them flow on) when some
    /// trigger targets it: arrivals rest there until an activation releases
    /// the oldest one.
    pub fn is_gated(&self, stage: StageId) -> bool {
        self.stage(stage).kind != StageKind::Create && self.triggers_into(stage).next().is_some()
    }

    /// A boundary exit: a transfer stage with no outgoing flow arc. Things
    /// arriving there leave the modeled system.
    pub fn is_boundary_exit(&self, stage: StageId) -> bool {
        self.stage(stage).kind == StageKind::Transfer && self.flows_from(stage).next().is_none()
    }

    /// Whether an arc crosses a machine boundary.
    pub fn is_cross_machine(&self, from: StageId, to: StageId) -> bool {
        self.stage(from).owner != self.stage(to).owner
    }

    pub fn stats(&self) -> ModelStats {
        let mut stages = BTreeMap::new();
        for kind in StageKind::ALL {
            let count = self.stages.iter().filter(|s| s.kind == kind).count();
            stages.insert(kind.keyword().to_string(), count);
        }
        ModelStats {
            machines: self.machines.len(),
            stages,
            flows: self.flows.len(),
            triggers: self.triggers.len(),
            stores: self.stores.len(),
        }
    }
}

/// Split `A.B.kind#tag` into (machine path, kind, tag).
pub fn split_stage_path(path: &str) -> Option<(String, StageKind, Option<String>)> {
    let (body, tag) = match path.split_once('#') {
        Some((body, tag)) if !tag.is_empty() => (body, Some(tag.to_string())),
        Some(_) => return None,
        None => (path, None),
    };
    let (machine_part, kind_part) = body.rsplit_once('.')?;
    let kind = StageKind::from_keyword(kind_part)?;
    if machine_part.is_empty() {
        return None;
    }
    Some((machine_part.to_string(), kind, tag))
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

/// Unresolved references collected during construction and resolved in
/// [`ModelBuilder::finish`].
#[derive(Debug, Clone)]
pub struct PendingFlow {
    pub from: String,
    pub to: String,
    pub carries: Option<String>,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone)]
pub struct PendingTrigger {
    pub from: String,
    pub to: String,
    /// Guard source text, parsed against the finished store table.
    pub guard: Option<String>,
    pub span: Option<SourceSpan>,
}

#[derive(Debug, Clone)]
pub struct PendingEvent {
    pub id: String,
    pub label: Option<String>,
    /// Region element references: stage paths or `from->to` arc strings.
    /// The last entry is the anchor.
    pub region: Vec<String>,
    pub span: Option<SourceSpan>,
}

/// Incremental model constructor used by the DSL parser and the JSON reader.
#[derive(Debug, Default)]
pub struct ModelBuilder {
    machines: Vec<Machine>,
    stages: Vec<Stage>,
    stores: Vec<Store>,
    roots: Vec<MachineId>,
    pending_flows: Vec<PendingFlow>,
    pending_triggers: Vec<PendingTrigger>,
    pending_events: Vec<PendingEvent>,
    diags: Vec<Diagnostic>,
    decl_counter: u32,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn next_decl(&mut self) -> u32 {
        let idx = self.decl_counter;
        self.decl_counter += 1;
        idx
    }

    pub fn error(&mut self, diag: Diagnostic) {
        self.diags.push(diag);
    }

    /// Declare a machine under `parent`; duplicate sibling names are rejected.
    pub fn add_machine(
        &mut self,
        name: &str,
        parent: Option<MachineId>,
        span: Option<SourceSpan>,
    ) -> MachineId {
        let path = match parent {
            Some(p) => format!("{}.{}", self.machines[p.0 as usize].path, name),
            None => name.to_string(),
        };
        let decl_idx = self.next_decl();
        if self.machines.iter().any(|m| m.path == path) {
            self.diags.push(
                Diagnostic::new("E-DUPLICATE", format!("machine {path} is declared twice"))
                    .with_path(path.clone())
                    .with_span(span)
                    .with_decl_idx(decl_idx),
            );
        }
        let id = MachineId(self.machines.len() as u32);
        self.machines.push(Machine {
            name: name.to_string(),
            parent,
            path,
            stages: Vec::new(),
            submachines: Vec::new(),
            stores: Vec::new(),
            span,
            decl_idx,
        });
        match parent {
            Some(p) => self.machines[p.0 as usize].submachines.push(id),
            None => self.roots.push(id),
        }
        id
    }

    pub fn add_stage(
        &mut self,
        owner: MachineId,
        kind: StageKind,
        tag: Option<&str>,
        fn_name: Option<&str>,
        span: Option<SourceSpan>,
    ) -> StageId {
        let machine_path = self.machines[owner.0 as usize].path.clone();
        let path = match tag {
            Some(tag) => format!("{machine_path}.{}#{tag}", kind.keyword()),
            None => format!("{machine_path}.{}", kind.keyword()),
        };
        let decl_idx = self.next_decl();
        let duplicate = self.machines[owner.0 as usize].stages.iter().any(|&s| {
            let st = &self.stages[s.0 as usize];
            st.kind == kind && st.tag.as_deref() == tag
        });
        if duplicate {
            self.diags.push(
                Diagnostic::new(
                    "E-DUPLICATE",
                    format!("stage {path} is declared twice in the same machine"),
                )
                .with_path(path.clone())
                .with_span(span)
                .with_decl_idx(decl_idx),
            );
        }
        let id = StageId(self.stages.len() as u32);
        self.stages.push(Stage {
            kind,
            tag: tag.map(str::to_string),
            owner,
            fn_name: fn_name.map(str::to_string),
            path,
            span,
            decl_idx,
        });
        self.machines[owner.0 as usize].stages.push(id);
        id
    }

    pub fn add_store(
        &mut self,
        owner: MachineId,
        name: &str,
        ty: StoreTy,
        initial: Value,
        span: Option<SourceSpan>,
    ) -> StoreId {
        let path = format!("{}.{}", self.machines[owner.0 as usize].path, name);
        let decl_idx = self.next_decl();
        let duplicate = self.machines[owner.0 as usize]
            .stores
            .iter()
            .any(|&s| self.stores[s.0 as usize].name == name);
        if duplicate {
            self.diags.push(
                Diagnostic::new("E-DUPLICATE", format!("store {path} is declared twice"))
                    .with_path(path.clone())
                    .with_span(span)
                    .with_decl_idx(decl_idx),
            );
        }
        if !ty.admits(&initial) {
            self.diags.push(
                Diagnostic::new(
                    "E-TYPE",
                    format!(
                        "store {path} has type {ty} but its initial value is {}",
                        initial.kind_name()
                    ),
                )
                .with_path(path.clone())
                .with_span(span)
                .with_decl_idx(decl_idx),
            );
        }
        let id = StoreId(self.stores.len() as u32);
        self.stores.push(Store {
            name: name.to_string(),
            owner,
            ty,
            initial,
            path,
            span,
            decl_idx,
        });
        self.machines[owner.0 as usize].stores.push(id);
        id
    }

    pub fn add_flow(&mut self, flow: PendingFlow) {
        self.pending_flows.push(flow);
    }

    pub fn add_trigger(&mut self, trigger: PendingTrigger) {
        self.pending_triggers.push(trigger);
    }

    pub fn add_event(&mut self, event: PendingEvent) {
        self.pending_events.push(event);
    }

    /// Resolve all pending references, type-check guards, and produce the
    /// model. Any collected diagnostic aborts construction.
    pub fn finish(mut self) -> Result<Model, Vec<Diagnostic>> {
        let mut model = Model {
            machines: std::mem::take(&mut self.machines),
            stages: std::mem::take(&mut self.stages),
            flows: Vec::new(),
            triggers: Vec::new(),
            stores: std::mem::take(&mut self.stores),
            events: Vec::new(),
            roots: std::mem::take(&mut self.roots),
        };
        let mut diags = std::mem::take(&mut self.diags);
        let mut decl = self.decl_counter;
        let mut next_decl = || {
            let idx = decl;
            decl += 1;
            idx
        };

        for pending in &self.pending_flows {
            let decl_idx = next_decl();
            let arc_path = format!("{}->{}", pending.from, pending.to);
            let mut resolve = |path: &str| match model.lookup_stage(path) {
                Ok(id) => Some(id),
                Err(err) => {
                    let code = match err {
                        LookupError::Ambiguous(_) => "E-AMBIGUOUS",
                        LookupError::NotFound(_) => "E-UNRESOLVED",
                    };
                    diags.push(
                        Diagnostic::new(code, format!("flow endpoint {path} does not resolve"))
                            .with_path(arc_path.clone())
                            .with_span(pending.span)
                            .with_decl_idx(decl_idx),
                    );
                    None
                }
            };
            let (from, to) = (resolve(&pending.from), resolve(&pending.to));
            let (Some(from), Some(to)) = (from, to) else {
                continue;
            };
            let duplicate = model.flows.iter().any(|f| {
                f.from == from && f.to == to && f.carries == pending.carries
            });
            if duplicate {
                diags.push(
                    Diagnostic::new("E-DUPLICATE", format!("flow {arc_path} is declared twice"))
                        .with_path(arc_path.clone())
                        .with_span(pending.span)
                        .with_decl_idx(decl_idx),
                );
                continue;
            }
            model.flows.push(FlowArc {
                from,
                to,
                carries: pending.carries.clone(),
                span: pending.span,
                decl_idx,
            });
        }

        for pending in &self.pending_triggers {
            let decl_idx = next_decl();
            let arc_path = format!("{}=>{}", pending.from, pending.to);
            let mut resolve = |path: &str| match model.lookup_stage(path) {
                Ok(id) => Some(id),
                Err(err) => {
                    let code = match err {
                        LookupError::Ambiguous(_) => "E-AMBIGUOUS",
                        LookupError::NotFound(_) => "E-UNRESOLVED",
                    };
                    diags.push(
                        Diagnostic::new(code, format!("trigger endpoint {path} does not resolve"))
                            .with_path(arc_path.clone())
                            .with_span(pending.span)
                            .with_decl_idx(decl_idx),
                    );
                    None
                }
            };
            let (from, to) = (resolve(&pending.from), resolve(&pending.to));
            let guard = match &pending.guard {
                Some(text) => match crate::expr::parse_guard(text, &model) {
                    Ok(expr) => Some(expr),
                    Err(msg) => {
                        diags.push(
                            Diagnostic::new("E-TYPE", format!("guard of {arc_path}: {msg}"))
                                .with_path(arc_path.clone())
                                .with_span(pending.span)
                                .with_decl_idx(decl_idx),
                        );
                        None
                    }
                },
                None => None,
            };
            let (Some(from), Some(to)) = (from, to) else {
                continue;
            };
            if pending.guard.is_some() && guard.is_none() {
                continue;
            }
            let duplicate = model
                .triggers
                .iter()
                .any(|t| t.from == from && t.to == to && t.guard == guard);
            if duplicate {
                diags.push(
                    Diagnostic::new("E-DUPLICATE", format!("trigger {arc_path} is declared twice"))
                        .with_path(arc_path.clone())
                        .with_span(pending.span)
                        .with_decl_idx(decl_idx),
                );
                continue;
            }
            model.triggers.push(TriggerArc {
                from,
                to,
                guard,
                span: pending.span,
                decl_idx,
            });
        }

        for pending in &self.pending_events {
            let decl_idx = next_decl();
            if model.events.iter().any(|e| e.id == pending.id) {
                diags.push(
                    Diagnostic::new(
                        "E-DUPLICATE",
                        format!("event {} is declared twice", pending.id),
                    )
                    .with_path(pending.id.clone())
                    .with_span(pending.span)
                    .with_decl_idx(decl_idx),
                );
                continue;
            }
            let mut region = Vec::new();
            let mut ok = true;
            for reference in &pending.region {
                match resolve_element(&model, reference) {
                    Some(elem) => region.push(elem),
                    None => {
                        ok = false;
                        diags.push(
                            Diagnostic::new(
                                "E-UNRESOLVED",
                                format!(
                                    "event {}: region element {reference} does not resolve",
                                    pending.id
                                ),
                            )
                            .with_path(pending.id.clone())
                            .with_span(pending.span)
                            .with_decl_idx(decl_idx),
                        );
                    }
                }
            }
            if !ok {
                continue;
            }
            let Some(&anchor) = region.last() else {
                diags.push(
                    Diagnostic::new(
                        "E-SYNTAX",
                        format!("event {} has an empty region", pending.id),
                    )
                    .with_path(pending.id.clone())
                    .with_span(pending.span)
                    .with_decl_idx(decl_idx),
                );
                continue;
            };
            model.events.push(EventDef {
                id: pending.id.clone(),
                label: pending.label.clone(),
                region,
                anchor,
                span: pending.span,
                decl_idx,
            });
        }

        if diags.is_empty() {
            Ok(model)
        } else {
            crate::diag::sort_diagnostics(&mut diags);
            Err(diags)
        }
    }
}

/// Resolve a region element reference: a stage path, or `from->to` naming all
/// flow arcs between those stages.
pub fn resolve_element(model: &Model, reference: &str) -> Option<ElementRef> {
    if let Some((from, to)) = reference.split_once("->") {
        let from = model.lookup_stage(from.trim()).ok()?;
        let to = model.lookup_stage(to.trim()).ok()?;
        let id = model
            .flow_ids()
            .find(|&f| model.flow(f).from == from && model.flow(f).to == to)?;
        Some(ElementRef::Flow(id))
    } else {
        model
            .lookup_stage(reference)
            .ok()
            .map(ElementRef::Stage)
    }
}
