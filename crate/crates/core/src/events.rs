//! Dynamic layer: event detection over traces and chronology conformance.
//!
//! An event occurs when its anchor element fires and every other region
//! element has fired since the event's previous occurrence (or since the
//! start of the trace); the event's marks then reset. Occurrences are
//! ordered by step, then by event declaration order; an event occurs at
//! most once per step.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{resolve_element, EventDef, Model};
use crate::sim::trace::{RecordKind, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventOccurrence {
    pub event: String,
    pub step: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub thing: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    #[error("E-REGION-UNKNOWN: event {event}: region element {element} is not in the model")]
    RegionUnknown { event: String, element: String },
    #[error("E-SCHEMA: {0}")]
    Schema(String),
}

/// JSON form of an event definition, as stored in `events.json` files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventDefDoc {
    pub id: String,
    pub label: Option<String>,
    pub region: Vec<String>,
    pub anchor: String,
}

/// Resolve JSON event definitions against a model.
pub fn resolve_defs(model: &Model, docs: &[EventDefDoc]) -> Result<Vec<EventDef>, EventError> {
    let mut defs = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        if !doc.region.contains(&doc.anchor) {
            return Err(EventError::Schema(format!(
                "event {}: anchor {:?} is not a region element",
                doc.id, doc.anchor
            )));
        }
        let mut region = Vec::new();
        let mut ordered: Vec<&String> = doc.region.iter().filter(|r| **r != doc.anchor).collect();
        ordered.push(&doc.anchor);
        for reference in ordered {
            match resolve_element(model, reference) {
                Some(elem) => region.push(elem),
                None => {
                    return Err(EventError::RegionUnknown {
                        event: doc.id.clone(),
                        element: reference.clone(),
                    })
                }
            }
        }
        let anchor = *region.last().expect("region is non-empty");
        defs.push(EventDef {
            id: doc.id.clone(),
            label: doc.label.clone(),
            region,
            anchor,
            span: None,
            decl_idx: i as u32,
        });
    }
    Ok(defs)
}

pub fn defs_to_docs(model: &Model, defs: &[EventDef]) -> Vec<EventDefDoc> {
    defs.iter()
        .map(|def| EventDefDoc {
            id: def.id.clone(),
            label: def.label.clone(),
            region: def.region.iter().map(|&e| model.element_path(e)).collect(),
            anchor: model.element_path(def.anchor),
        })
        .collect()
}

/// Incremental detector fed one trace record at a time.
///
/// A record marks region elements as follows: an inject or apply-fn record
/// marks its stage; a fire-flow record marks the arc and the destination
/// stage (entry is what fires a stage). Refusals, trigger firings, store
/// writes, and event records mark nothing.
pub struct EventDetector<'m> {
    model: &'m Model,
    defs: Vec<DetectorDef>,
    /// element string -> (def index, region slot)
    by_element: HashMap<String, Vec<(usize, usize)>>,
    /// stage path -> defs where an arc *into* it exists is irrelevant; this
    /// maps destination stages parsed out of arc strings.
    occurrences: Vec<EventOccurrence>,
}

struct DetectorDef {
    id: String,
    decl_idx: u32,
    marks: Vec<bool>,
    anchor_slot: usize,
    last_step: Option<u64>,
}

impl<'m> EventDetector<'m> {
    pub fn new(model: &'m Model, defs: &[EventDef]) -> Self {
        let mut by_element: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        let mut detector_defs = Vec::new();
        for (i, def) in defs.iter().enumerate() {
            for (slot, &elem) in def.region.iter().enumerate() {
                by_element
                    .entry(model.element_path(elem))
                    .or_default()
                    .push((i, slot));
            }
            let anchor_slot = def
                .region
                .iter()
                .position(|&e| e == def.anchor)
                .expect("anchor is a region element");
            detector_defs.push(DetectorDef {
                id: def.id.clone(),
                decl_idx: def.decl_idx,
                marks: vec![false; def.region.len()],
                anchor_slot,
                last_step: None,
            });
        }
        EventDetector {
            model,
            defs: detector_defs,
            by_element,
            occurrences: Vec::new(),
        }
    }

    pub fn feed(&mut self, record: &TraceRecord) {
        match record.kind {
            RecordKind::Inject | RecordKind::ApplyFn => {
                self.mark(&record.element, record.step, record.thing);
            }
            RecordKind::FireFlow => {
                let arc = record.element.clone();
                self.mark(&arc, record.step, record.thing);
                if let Some((_, to)) = arc.split_once("->") {
                    let to = to.to_string();
                    self.mark(&to, record.step, record.thing);
                }
            }
            RecordKind::RefusedInject
            | RecordKind::FireTrigger
            | RecordKind::StoreWrite
            | RecordKind::Event => {}
        }
    }

    fn mark(&mut self, element: &str, step: u64, thing: Option<u64>) {
        let Some(hits) = self.by_element.get(element) else {
            return;
        };
        for &(def_idx, slot) in hits {
            let def = &mut self.defs[def_idx];
            def.marks[slot] = true;
            if slot == def.anchor_slot && def.marks.iter().all(|&m| m) {
                let duplicate = def.last_step == Some(step);
                def.marks.iter_mut().for_each(|m| *m = false);
                def.last_step = Some(step);
                if !duplicate {
                    self.occurrences.push(EventOccurrence {
                        event: def.id.clone(),
                        step,
                        thing,
                    });
                }
            }
        }
    }

    fn sort_batch(&self, batch: &mut [EventOccurrence]) {
        let order: HashMap<&str, u32> = self
            .defs
            .iter()
            .map(|d| (d.id.as_str(), d.decl_idx))
            .collect();
        batch.sort_by_key(|occ| (occ.step, order.get(occ.event.as_str()).copied().unwrap_or(0)));
    }

    /// All occurrences so far, ordered by (step, declaration order).
    pub fn occurrences(mut self) -> Vec<EventOccurrence> {
        let mut out = std::mem::take(&mut self.occurrences);
        self.sort_batch(&mut out);
        out
    }

    /// Drain the occurrences accumulated since the previous drain, ordered by
    /// (step, declaration order). Detection marks persist.
    pub fn take_batch(&mut self) -> Vec<EventOccurrence> {
        let mut out = std::mem::take(&mut self.occurrences);
        self.sort_batch(&mut out);
        out
    }

    pub fn model(&self) -> &Model {
        self.model
    }
}

/// Detect occurrences of `defs` over a finished trace.
pub fn detect_events(
    model: &Model,
    defs: &[EventDef],
    trace: &[TraceRecord],
) -> Vec<EventOccurrence> {
    let mut detector = EventDetector::new(model, defs);
    for record in trace {
        detector.feed(record);
    }
    detector.occurrences()
}

// ---------------------------------------------------------------------------
// Chronology
// ---------------------------------------------------------------------------

/// A succession graph over event ids: which event may immediately follow
/// which, which events may come first, and which may repeat (shorthand for a
/// self-loop edge).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chronology {
    pub events: Vec<String>,
    pub start: Vec<String>,
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub repeatable: Vec<String>,
}

impl Chronology {
    pub fn from_json(text: &str) -> Result<Chronology, EventError> {
        let chron: Chronology =
            serde_json::from_str(text).map_err(|e| EventError::Schema(e.to_string()))?;
        chron.check_well_formed()?;
        Ok(chron)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chronology serialization cannot fail")
    }

    pub fn check_well_formed(&self) -> Result<(), EventError> {
        if self.start.is_empty() {
            return Err(EventError::Schema("start set is empty".to_string()));
        }
        let declared = |id: &String| self.events.contains(id);
        for id in self.start.iter().chain(&self.repeatable) {
            if !declared(id) {
                return Err(EventError::Schema(format!("undeclared event {id:?}")));
            }
        }
        for (a, b) in &self.edges {
            if !declared(a) || !declared(b) {
                return Err(EventError::Schema(format!("edge ({a:?}, {b:?}) names an undeclared event")));
            }
        }
        Ok(())
    }

    fn has_edge(&self, from: &str, to: &str) -> bool {
        if from == to && self.repeatable.iter().any(|r| r == from) {
            return true;
        }
        self.edges.iter().any(|(a, b)| a == from && b == to)
    }

    /// A chronology over `events` that accepts every occurrence list.
    pub fn complete(events: &[String]) -> Chronology {
        let mut edges = Vec::new();
        for a in events {
            for b in events {
                edges.push((a.clone(), b.clone()));
            }
        }
        Chronology {
            events: events.to_vec(),
            start: events.to_vec(),
            edges,
            repeatable: Vec::new(),
        }
    }
}

/// Outcome of checking an occurrence list against a chronology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conformance {
    /// Also the verdict for an empty occurrence list: no succession is violated.
    Conforms,
    Violation {
        index: usize,
        prev: Option<String>,
        at: String,
        reason: ViolationReason,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationReason {
    UnknownEvent,
    NotInStartSet,
    NoSuchEdge,
}

impl Conformance {
    pub fn conforms(&self) -> bool {
        matches!(self, Conformance::Conforms)
    }
}

pub fn check_chronology(occs: &[EventOccurrence], chron: &Chronology) -> Conformance {
    for (i, occ) in occs.iter().enumerate() {
        if !chron.events.contains(&occ.event) {
            return Conformance::Violation {
                index: i,
                prev: if i > 0 { Some(occs[i - 1].event.clone()) } else { None },
                at: occ.event.clone(),
                reason: ViolationReason::UnknownEvent,
            };
        }
        if i == 0 {
            if !chron.start.contains(&occ.event) {
                return Conformance::Violation {
                    index: 0,
                    prev: None,
                    at: occ.event.clone(),
                    reason: ViolationReason::NotInStartSet,
                };
            }
        } else {
            let prev = &occs[i - 1].event;
            if !chron.has_edge(prev, &occ.event) {
                return Conformance::Violation {
                    index: i,
                    prev: Some(prev.clone()),
                    at: occ.event.clone(),
                    reason: ViolationReason::NoSuchEdge,
                };
            }
        }
    }
    Conformance::Conforms
}
