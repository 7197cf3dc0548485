//! DOT rendering: one cluster per machine (nested for submachines), ellipse
//! nodes for stages, box nodes for stores, solid edges for flows, dashed
//! edges for triggers.

use std::fmt::Write;

use tm_core::model::{MachineId, Model};

pub fn to_dot(model: &Model) -> String {
    let mut out = String::new();
    out.push_str("digraph model {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    for &root in &model.roots {
        write_machine(model, root, 1, &mut out);
    }
    for id in model.flow_ids() {
        let arc = model.flow(id);
        let mut attrs = String::new();
        if let Some(carries) = &arc.carries {
            write!(attrs, " [label=\"{}\"]", escape(carries)).unwrap();
        }
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\"{attrs};",
            escape(&model.stage(arc.from).path),
            escape(&model.stage(arc.to).path),
        );
    }
    for id in model.trigger_ids() {
        let arc = model.trigger(id);
        let mut attrs = "style=dashed".to_string();
        if let Some(guard) = &arc.guard {
            write!(attrs, " label=\"{}\"", escape(&guard.display(model).to_string())).unwrap();
        }
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [{attrs}];",
            escape(&model.stage(arc.from).path),
            escape(&model.stage(arc.to).path),
        );
    }
    out.push_str("}\n");
    out
}

fn write_machine(model: &Model, id: MachineId, depth: usize, out: &mut String) {
    let machine = model.machine(id);
    let indent = "  ".repeat(depth);
    let _ = writeln!(out, "{indent}subgraph \"cluster_{}\" {{", escape(&machine.path));
    let _ = writeln!(out, "{indent}  label=\"{}\";", escape(&machine.name));
    for &stage_id in &machine.stages {
        let stage = model.stage(stage_id);
        let mut label = stage.kind.keyword().to_string();
        if let Some(tag) = &stage.tag {
            label.push('#');
            label.push_str(tag);
        }
        if let Some(fn_name) = &stage.fn_name {
            label.push_str("\\nfn ");
            label.push_str(fn_name);
        }
        let _ = writeln!(
            out,
            "{indent}  \"{}\" [label=\"{label}\" shape=ellipse];",
            escape(&stage.path)
        );
    }
    for &store_id in &machine.stores {
        let store = model.store(store_id);
        let _ = writeln!(
            out,
            "{indent}  \"{}\" [label=\"{}: {} = {}\" shape=box];",
            escape(&store.path),
            escape(&store.name),
            store.ty,
            escape(&store.initial.to_string()),
        );
    }
    for &sub in &machine.submachines {
        write_machine(model, sub, depth + 1, out);
    }
    let _ = writeln!(out, "{indent}}}");
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tm_core::dsl::parse_model;

    #[test]
    fn single_machine_one_cluster_one_node() {
        let model = parse_model("machine M { create; }").unwrap();
        let dot = to_dot(&model);
        assert_eq!(dot.matches("subgraph").count(), 1);
        assert!(dot.contains("\"M.create\" [label=\"create\" shape=ellipse];"));
    }

    #[test]
    fn dashed_style_present_iff_triggers_exist() {
        let plain = parse_model("machine M { create; release; } flow M.create -> M.release;").unwrap();
        assert!(!to_dot(&plain).contains("style=dashed"));
        let triggered = parse_model(
            "machine M { create; release; create #x; } flow M.create -> M.release; trigger M.release -> M.create#x;",
        )
        .unwrap();
        assert!(to_dot(&triggered).contains("style=dashed"));
    }

    #[test]
    fn nested_machines_nest_clusters() {
        let model = parse_model("machine SA { create; machine Phone { receive; } }").unwrap();
        let dot = to_dot(&model);
        let outer = dot.find("cluster_SA\"").unwrap();
        let inner = dot.find("cluster_SA.Phone\"").unwrap();
        let outer_close = dot.rfind("  }").unwrap();
        assert!(outer < inner && inner < outer_close, "inner cluster inside outer\n{dot}");
    }
}
