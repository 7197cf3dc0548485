//! Canonical text emitter. `parse_model(emit_text(m))` is structurally
//! identical to `m`, and emitting is a fixpoint after one round.
//!
//! Ordering: machines in declaration order; inside each machine, stages in
//! kind order (create, process, release, transfer, receive), then stores,
//! then submachines; after the machine blocks come flows, triggers, and
//! events, each in declaration order.

use std::fmt::Write;

use crate::model::{MachineId, Model, StageId};

pub fn emit_text(model: &Model) -> String {
    let mut out = String::new();
    for (i, &root) in model.roots.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        emit_machine(model, root, 0, &mut out);
    }

    let section = |out: &mut String, lines: Vec<String>| {
        if lines.is_empty() {
            return;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
    };

    section(
        &mut out,
        model
            .flow_ids()
            .map(|f| {
                let arc = model.flow(f);
                let mut line = format!(
                    "flow {} -> {}",
                    model.stage(arc.from).path,
                    model.stage(arc.to).path
                );
                if let Some(carries) = &arc.carries {
                    write!(line, " carries {carries}").unwrap();
                }
                line.push(';');
                line
            })
            .collect(),
    );

    section(
        &mut out,
        model
            .trigger_ids()
            .map(|t| {
                let arc = model.trigger(t);
                let mut line = format!(
                    "trigger {} -> {}",
                    model.stage(arc.from).path,
                    model.stage(arc.to).path
                );
                if let Some(guard) = &arc.guard {
                    write!(line, " when {}", guard.display(model)).unwrap();
                }
                line.push(';');
                line
            })
            .collect(),
    );

    section(
        &mut out,
        model
            .events
            .iter()
            .map(|event| {
                let mut line = format!("event {}", event.id);
                if let Some(label) = &event.label {
                    write!(line, " label \"{}\"", escape(label)).unwrap();
                }
                let region: Vec<String> = event
                    .region
                    .iter()
                    .map(|&elem| model.element_path(elem))
                    .collect();
                write!(line, " region {{ {} }};", region.join(", ")).unwrap();
                line
            })
            .collect(),
    );

    out
}

fn emit_machine(model: &Model, id: MachineId, depth: usize, out: &mut String) {
    let machine = model.machine(id);
    let indent = "  ".repeat(depth);
    let _ = writeln!(out, "{indent}machine {} {{", machine.name);
    let inner = "  ".repeat(depth + 1);

    let mut stages: Vec<StageId> = machine.stages.clone();
    stages.sort_by_key(|&s| (model.stage(s).kind.order(), model.stage(s).decl_idx));
    for stage_id in stages {
        let stage = model.stage(stage_id);
        let mut line = format!("{inner}{}", stage.kind.keyword());
        if let Some(tag) = &stage.tag {
            let _ = write!(line, " #{tag}");
        }
        if let Some(fn_name) = &stage.fn_name {
            let _ = write!(line, " fn {fn_name}");
        }
        line.push(';');
        out.push_str(&line);
        out.push('\n');
    }

    for &store_id in &machine.stores {
        let store = model.store(store_id);
        let initial = match &store.initial {
            crate::value::Value::Str(s) => format!("\"{}\"", escape(s)),
            other => other.to_string(),
        };
        let _ = writeln!(out, "{inner}store {}: {} = {initial};", store.name, store.ty);
    }

    for &sub in &machine.submachines {
        emit_machine(model, sub, depth + 1, out);
    }

    let _ = writeln!(out, "{indent}}}");
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
    out
}
