//! JSON model documents.
//!
//! The document layout is flat: five top-level arrays (machines, flows,
//! triggers, stores, events) with every cross-reference expressed as a
//! canonical path string. Stage arrays are emitted in canonical kind order,
//! so `to_json` of structurally equal models is byte-identical.

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::model::{
    Model, ModelBuilder, PendingEvent, PendingFlow, PendingTrigger, StageKind, StoreTy,
};
use crate::value::Value;

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelDoc {
    pub machines: Vec<MachineDoc>,
    pub flows: Vec<FlowDoc>,
    pub triggers: Vec<TriggerDoc>,
    pub stores: Vec<StoreDoc>,
    pub events: Vec<EventDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MachineDoc {
    pub name: String,
    pub parent: Option<String>,
    pub stages: Vec<StageDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StageDoc {
    pub kind: StageKind,
    pub tag: Option<String>,
    #[serde(rename = "fn")]
    pub fn_name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FlowDoc {
    pub from: String,
    pub to: String,
    pub carries: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TriggerDoc {
    pub from: String,
    pub to: String,
    pub when: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StoreDoc {
    pub owner: String,
    pub name: String,
    #[serde(rename = "type")]
    pub ty: StoreTy,
    pub initial: Value,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EventDoc {
    pub id: String,
    pub label: Option<String>,
    pub region: Vec<String>,
    pub anchor: String,
}

pub fn to_doc(model: &Model) -> ModelDoc {
    let machines = model
        .machines
        .iter()
        .map(|machine| {
            let mut stages: Vec<_> = machine.stages.clone();
            stages.sort_by_key(|&s| (model.stage(s).kind.order(), model.stage(s).decl_idx));
            MachineDoc {
                name: machine.name.clone(),
                parent: machine.parent.map(|p| model.machine(p).path.clone()),
                stages: stages
                    .into_iter()
                    .map(|s| {
                        let stage = model.stage(s);
                        StageDoc {
                            kind: stage.kind,
                            tag: stage.tag.clone(),
                            fn_name: stage.fn_name.clone(),
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    let flows = model
        .flows
        .iter()
        .map(|arc| FlowDoc {
            from: model.stage(arc.from).path.clone(),
            to: model.stage(arc.to).path.clone(),
            carries: arc.carries.clone(),
        })
        .collect();
    let triggers = model
        .triggers
        .iter()
        .map(|arc| TriggerDoc {
            from: model.stage(arc.from).path.clone(),
            to: model.stage(arc.to).path.clone(),
            when: arc.guard.as_ref().map(|g| g.display(model).to_string()),
        })
        .collect();
    let stores = model
        .stores
        .iter()
        .map(|store| StoreDoc {
            owner: model.machine(store.owner).path.clone(),
            name: store.name.clone(),
            ty: store.ty,
            initial: store.initial.clone(),
        })
        .collect();
    let events = model
        .events
        .iter()
        .map(|event| EventDoc {
            id: event.id.clone(),
            label: event.label.clone(),
            region: event
                .region
                .iter()
                .map(|&elem| model.element_path(elem))
                .collect(),
            anchor: model.element_path(event.anchor),
        })
        .collect();
    ModelDoc { machines, flows, triggers, stores, events }
}

/// Serialize a model to its canonical JSON text (compact, stable key order).
pub fn to_json(model: &Model) -> String {
    serde_json::to_string(&to_doc(model)).expect("model serialization cannot fail")
}

fn schema_error(message: impl Into<String>) -> Vec<Diagnostic> {
    vec![Diagnostic::new("E-SCHEMA", message)]
}

pub fn from_json(text: &str) -> Result<Model, Vec<Diagnostic>> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| schema_error(e.to_string()))?;
    from_doc(&doc)
}

pub fn from_doc(doc: &ModelDoc) -> Result<Model, Vec<Diagnostic>> {
    let mut builder = ModelBuilder::new();
    let mut paths = Vec::new();
    for machine in &doc.machines {
        let parent = match &machine.parent {
            None => None,
            Some(parent_path) => match paths
                .iter()
                .position(|(path, _)| path == parent_path)
            {
                Some(i) => Some(paths[i].1),
                None => {
                    return Err(schema_error(format!(
                        "machine {:?} names parent {parent_path:?}, which is not declared before it",
                        machine.name
                    )))
                }
            },
        };
        let id = builder.add_machine(&machine.name, parent, None);
        let full_path = match &machine.parent {
            Some(parent_path) => format!("{parent_path}.{}", machine.name),
            None => machine.name.clone(),
        };
        paths.push((full_path, id));
        for stage in &machine.stages {
            builder.add_stage(
                id,
                stage.kind,
                stage.tag.as_deref(),
                stage.fn_name.as_deref(),
                None,
            );
        }
    }
    for store in &doc.stores {
        let Some(&(_, owner)) = paths.iter().find(|(path, _)| path == &store.owner) else {
            return Err(schema_error(format!(
                "store {:?} names unknown owner {:?}",
                store.name, store.owner
            )));
        };
        builder.add_store(owner, &store.name, store.ty, store.initial.clone(), None);
    }
    for flow in &doc.flows {
        builder.add_flow(PendingFlow {
            from: flow.from.clone(),
            to: flow.to.clone(),
            carries: flow.carries.clone(),
            span: None,
        });
    }
    for trigger in &doc.triggers {
        builder.add_trigger(PendingTrigger {
            from: trigger.from.clone(),
            to: trigger.to.clone(),
            guard: trigger.when.clone(),
            span: None,
        });
    }
    for event in &doc.events {
        if !event.region.contains(&event.anchor) {
            return Err(schema_error(format!(
                "event {}: anchor {:?} is not a region element",
                event.id, event.anchor
            )));
        }
        let mut region: Vec<String> = event
            .region
            .iter()
            .filter(|r| **r != event.anchor)
            .cloned()
            .collect();
        region.push(event.anchor.clone());
        builder.add_event(PendingEvent {
            id: event.id.clone(),
            label: event.label.clone(),
            region,
            span: None,
        });
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;

    #[test]
    fn empty_model_document() {
        assert_eq!(
            to_json(&Model::default()),
            r#"{"machines":[],"flows":[],"triggers":[],"stores":[],"events":[]}"#
        );
    }

    #[test]
    fn missing_machines_key_is_schema_error() {
        let err = from_json(r#"{"flows":[]}"#).unwrap_err();
        assert_eq!(err[0].code, "E-SCHEMA");
    }

    #[test]
    fn round_trip_preserves_structure() {
        let src = "machine Q { transfer; receive; release; store rear: int = 0; store blocked: bool = false; }\n\
                   machine S { transfer; receive; process #serve fn set_busy; machine Inner { create #x; } }\n\
                   flow Q.transfer -> Q.receive;\n\
                   flow Q.release -> Q.transfer carries customer;\n\
                   trigger Q.receive -> S.Inner.create#x when !blocked;\n\
                   event E1 region { Q.transfer, Q.receive };";
        let model = parse_model(src).unwrap();
        let text = to_json(&model);
        let back = from_json(&text).unwrap();
        assert_eq!(to_json(&back), text);
        assert_eq!(model.stats(), back.stats());
    }

    #[test]
    fn anchor_must_be_in_region() {
        let text = r#"{"machines":[{"name":"M","parent":null,"stages":[{"kind":"create","tag":null,"fn":null}]}],"flows":[],"triggers":[],"stores":[],"events":[{"id":"E1","label":null,"region":["M.create"],"anchor":"M.release"}]}"#;
        let err = from_json(text).unwrap_err();
        assert_eq!(err[0].code, "E-SCHEMA");
    }
}
