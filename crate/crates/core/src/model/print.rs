use std::fmt::Write;

use super::{Effect, SfcModel};

/// Canonical text: declarations grouped by kind (variables, steps, diagrams,
/// actions) and sorted by name within a kind, then transitions in source
/// order.
pub fn canonical_text(model: &SfcModel) -> String {
    let mut out = String::new();

    let mut vars: Vec<_> = model.vars.iter().collect();
    vars.sort_by(|a, b| a.name.cmp(&b.name));
    for v in vars {
        write!(out, "var {} : {}", v.name, v.ty).unwrap();
        if v.is_time {
            out.push_str(" time");
        }
        if let Some(init) = v.init {
            write!(out, " = {init}").unwrap();
        }
        out.push('\n');
    }

    let mut steps: Vec<_> = model.steps.iter().collect();
    steps.sort();
    for s in steps {
        write!(out, "step {s}").unwrap();
        if model.initial.contains(s) {
            out.push_str(" initial");
        }
        out.push('\n');
    }

    let mut fbds: Vec<_> = model.fbds.iter().collect();
    fbds.sort_by(|a, b| a.name.cmp(&b.name));
    for f in fbds {
        writeln!(out, "{f}").unwrap();
    }

    let mut actions: Vec<_> = model.actions.iter().collect();
    actions.sort_by(|a, b| a.id.cmp(&b.id));
    for a in actions {
        write!(out, "action {}", a.id).unwrap();
        let owners: Vec<&str> =
            model.step_actions.iter().filter(|(_, list)| list.contains(&a.id)).map(|(s, _)| s.as_str()).collect();
        if !owners.is_empty() {
            write!(out, " on {}", owners.join(", ")).unwrap();
        }
        match &a.effect {
            Effect::Assign(body) if body.is_empty() => out.push_str(" { }"),
            Effect::Assign(body) => {
                out.push_str(" {");
                for stmt in body {
                    write!(out, " {stmt};").unwrap();
                }
                out.push_str(" }");
            }
            Effect::Fbd(name) => write!(out, " fbd {name}").unwrap(),
        }
        out.push('\n');
    }

    for t in &model.transitions {
        write!(out, "trans {{{}}} -[ {} ]-> {{{}}}", t.sources.join(", "), t.guard, t.targets.join(", ")).unwrap();
        if let Some(p) = t.priority {
            write!(out, " prio {p}").unwrap();
        }
        out.push('\n');
    }
    out
}
