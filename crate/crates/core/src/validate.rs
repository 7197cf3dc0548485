//! Structural validation: flow legality against the rule table, entry/exit
//! sanity, and trigger checks.
//!
//! A model is accepted when [`validate`] returns no `E-*` diagnostic;
//! warnings (`W-*`) do not reject.

use crate::diag::{sort_diagnostics, Diagnostic};
use crate::expr::Ty;
use crate::model::{Model, StageKind};

/// Legal stage-to-stage flow successions.
///
/// R1 (within one machine):
/// create->process, create->release, receive->process, receive->release,
/// process->release, release->transfer, transfer->receive.
///
/// R2 (across machines): transfer->transfer only.
///
/// Processing that produces a new thing is expressed as a trigger into a
/// create stage, never as a flow, so process->create is absent on purpose;
/// transfer->release (re-export without receive) is also excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleTable;

pub const R1: [(StageKind, StageKind); 7] = [
    (StageKind::Create, StageKind::Process),
    (StageKind::Create, StageKind::Release),
    (StageKind::Receive, StageKind::Process),
    (StageKind::Receive, StageKind::Release),
    (StageKind::Process, StageKind::Release),
    (StageKind::Release, StageKind::Transfer),
    (StageKind::Transfer, StageKind::Receive),
];

pub const R2: [(StageKind, StageKind); 1] = [(StageKind::Transfer, StageKind::Transfer)];

impl RuleTable {
    pub fn intra_legal(from: StageKind, to: StageKind) -> bool {
        R1.contains(&(from, to))
    }

    pub fn cross_legal(from: StageKind, to: StageKind) -> bool {
        R2.contains(&(from, to))
    }

    pub fn is_legal(from: StageKind, to: StageKind, cross_machine: bool) -> bool {
        if cross_machine {
            Self::cross_legal(from, to)
        } else {
            Self::intra_legal(from, to)
        }
    }
}

/// Flow-arc legality against R1/R2.
pub fn check_flows(model: &Model) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for id in model.flow_ids() {
        let arc = model.flow(id);
        let from = model.stage(arc.from);
        let to = model.stage(arc.to);
        let cross = model.is_cross_machine(arc.from, arc.to);
        if !RuleTable::is_legal(from.kind, to.kind, cross) {
            let scope = if cross { "across machines" } else { "within one machine" };
            diags.push(
                Diagnostic::new(
                    "E-FLOW-ILLEGAL",
                    format!("{} may not flow to {} {scope}", from.kind, to.kind),
                )
                .with_path(model.flow_path(id))
                .with_span(arc.span)
                .with_decl_idx(arc.decl_idx),
            );
        }
    }
    diags
}

/// How things enter and leave: unreachable receives, dead creates, orphans.
pub fn check_entry_exit(model: &Model) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for id in model.stage_ids() {
        let stage = model.stage(id);
        let has_flow = model.flows_from(id).next().is_some() || model.flows_into(id).next().is_some();
        let has_trigger =
            model.triggers_from(id).next().is_some() || model.triggers_into(id).next().is_some();
        if !has_flow && !has_trigger {
            diags.push(
                Diagnostic::new(
                    "E-ORPHAN-STAGE",
                    format!("stage {} has no flow arcs and no trigger arcs", stage.path),
                )
                .with_path(stage.path.clone())
                .with_span(stage.span)
                .with_decl_idx(stage.decl_idx),
            );
        }
        match stage.kind {
            StageKind::Receive => {
                // fed when some incoming transfer is itself a boundary import
                // (no inflow) or is supplied from another machine
                let fed = model.flows_into(id).any(|f| {
                    let feeder = model.flow(f).from;
                    if model.stage(feeder).kind != StageKind::Transfer {
                        return false;
                    }
                    let mut inflows = model.flows_into(feeder).peekable();
                    if inflows.peek().is_none() {
                        return true;
                    }
                    inflows.any(|g| model.is_cross_machine(model.flow(g).from, feeder))
                });
                if !fed {
                    diags.push(
                        Diagnostic::new(
                            "W-UNREACHABLE-RECEIVE",
                            format!(
                                "receive {} is never fed through a transfer from a boundary or another machine",
                                stage.path
                            ),
                        )
                        .with_path(stage.path.clone())
                        .with_span(stage.span)
                        .with_decl_idx(stage.decl_idx),
                    );
                }
            }
            StageKind::Create => {
                let dead = model.flows_from(id).next().is_none()
                    && model.triggers_into(id).next().is_none()
                    && stage.fn_name.is_none();
                if dead {
                    diags.push(
                        Diagnostic::new(
                            "W-DEAD-CREATE",
                            format!(
                                "create {} has no outgoing flow, no incoming trigger, and no fn",
                                stage.path
                            ),
                        )
                        .with_path(stage.path.clone())
                        .with_span(stage.span)
                        .with_decl_idx(stage.decl_idx),
                    );
                }
            }
            _ => {}
        }
    }
    diags
}

/// Trigger sanity: targets should be creates, guards must type-check.
pub fn check_triggers(model: &Model) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for id in model.trigger_ids() {
        let arc = model.trigger(id);
        let target = model.stage(arc.to);
        if target.kind != StageKind::Create {
            diags.push(
                Diagnostic::new(
                    "W-TRIGGER-TARGET",
                    format!("trigger activates {} stage {}", target.kind, target.path),
                )
                .with_path(model.trigger_path(id))
                .with_span(arc.span)
                .with_decl_idx(arc.decl_idx),
            );
        }
        if let Some(guard) = &arc.guard {
            let problem = match guard.type_check(model) {
                Ok(ty) if ty == Ty::Bool || ty == Ty::Any => None,
                Ok(ty) => Some(format!("guard must be bool, found {ty}")),
                Err(msg) => Some(msg),
            };
            if let Some(problem) = problem {
                diags.push(
                    Diagnostic::new("E-TRIGGER-GUARD", problem)
                        .with_path(model.trigger_path(id))
                        .with_span(arc.span)
                        .with_decl_idx(arc.decl_idx),
                );
            }
        }
    }
    diags
}

/// All checks combined, in canonical order. Accepted iff no `E-*` remains.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut diags = check_flows(model);
    diags.extend(check_entry_exit(model));
    diags.extend(check_triggers(model));
    sort_diagnostics(&mut diags);
    diags
}

/// True when the model carries no `E-*` diagnostic.
pub fn is_accepted(model: &Model) -> bool {
    !crate::diag::has_errors(&validate(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;
    use crate::expr::{BinOp, Expr};
    use crate::model::{ModelBuilder, StoreTy};
    use crate::value::Value;

    #[test]
    fn release_to_transfer_is_legal() {
        let model =
            parse_model("machine M { release; transfer; } flow M.release -> M.transfer;").unwrap();
        assert!(check_flows(&model).is_empty());
    }

    #[test]
    fn transfer_to_process_is_illegal() {
        let model =
            parse_model("machine M { transfer; process; } flow M.transfer -> M.process;").unwrap();
        let diags = check_flows(&model);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "E-FLOW-ILLEGAL");
        assert_eq!(diags[0].path.as_deref(), Some("M.transfer->M.process"));
    }

    #[test]
    fn cross_machine_release_to_receive_is_illegal() {
        let model = parse_model(
            "machine A { release; } machine B { receive; } flow A.release -> B.receive;",
        )
        .unwrap();
        let diags = check_flows(&model);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "E-FLOW-ILLEGAL");
    }

    #[test]
    fn lone_receive_warns_unreachable() {
        let model = parse_model("machine M { receive; }").unwrap();
        let diags = check_entry_exit(&model);
        assert!(diags.iter().any(|d| d.code == "W-UNREACHABLE-RECEIVE"), "{diags:?}");
    }

    #[test]
    fn straight_pipeline_is_clean() {
        let model = parse_model(
            "machine M { create; release; transfer; } flow M.create -> M.release; flow M.release -> M.transfer;",
        )
        .unwrap();
        assert!(check_entry_exit(&model).is_empty());
        assert!(check_flows(&model).is_empty());
    }

    #[test]
    fn trigger_into_create_is_clean_into_transfer_warns() {
        let model = parse_model(
            "machine M { create #a; transfer; release; } \
             flow M.create#a -> M.release; flow M.release -> M.transfer; \
             trigger M.transfer -> M.create#a;",
        )
        .unwrap();
        assert!(check_triggers(&model).is_empty());

        let model = parse_model(
            "machine M { create #a; transfer; release; } \
             flow M.create#a -> M.release; flow M.release -> M.transfer; \
             trigger M.create#a -> M.transfer;",
        )
        .unwrap();
        let diags = check_triggers(&model);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "W-TRIGGER-TARGET");
    }

    #[test]
    fn ill_typed_guard_on_built_model_reported() {
        // hand-built model, bypassing the parser's own type check
        let mut b = ModelBuilder::new();
        let m = b.add_machine("M", None, None);
        let from = b.add_stage(m, StageKind::Transfer, None, None, None);
        let to = b.add_stage(m, StageKind::Create, None, None, None);
        b.add_store(m, "rear", StoreTy::Int, Value::Int(0), None);
        let mut model = b.finish().unwrap();
        let rear = model.lookup_store("rear").unwrap();
        model.triggers.push(crate::model::TriggerArc {
            from,
            to,
            guard: Some(Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Store(rear)),
                Box::new(Expr::Bool(true)),
            )),
            span: None,
            decl_idx: 99,
        });
        let diags = check_triggers(&model);
        assert!(diags.iter().any(|d| d.code == "E-TRIGGER-GUARD"), "{diags:?}");
    }

    #[test]
    fn diagnostics_sorted_by_declaration_order() {
        let model = parse_model(
            "machine M { transfer #a; process; receive; } \
             flow M.transfer#a -> M.process; \
             flow M.process -> M.transfer#a;",
        )
        .unwrap();
        let diags = validate(&model);
        let positions: Vec<u32> = diags.iter().map(|d| d.decl_idx).collect();
        let mut sorted = positions.clone();
        sorted.sort();
        assert_eq!(positions, sorted);
    }
}
