use std::collections::BTreeSet;
use std::fmt;

use super::{is_identifier, Effect, SfcModel};
use crate::expr::Ty;

/// One well-formedness violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    BadIdentifier(String),
    DuplicateStep(String),
    DuplicateVar(String),
    DuplicateAction(String),
    DuplicateFbd(String),
    EmptyInitial,
    InitialNotStep(String),
    UnknownStep { transition: usize, step: String },
    EmptySources(usize),
    EmptyTargets(usize),
    DuplicateSource { transition: usize, step: String },
    DuplicateTarget { transition: usize, step: String },
    Guard { transition: usize, message: String },
    StepActionsNotTotal(String),
    StepActionsUnknownStep(String),
    UnknownAction { step: String, action: String },
    Action { action: String, message: String },
    UnknownFbd { action: String, fbd: String },
    Fbd { fbd: String, message: String },
    TimeOnBool(String),
    Initializer { var: String, message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadIdentifier(s) => write!(f, "invalid identifier `{s}`"),
            Violation::DuplicateStep(s) => write!(f, "duplicate step `{s}`"),
            Violation::DuplicateVar(s) => write!(f, "duplicate variable `{s}`"),
            Violation::DuplicateAction(s) => write!(f, "duplicate action `{s}`"),
            Violation::DuplicateFbd(s) => write!(f, "duplicate fbd `{s}`"),
            Violation::EmptyInitial => write!(f, "empty initial set"),
            Violation::InitialNotStep(s) => write!(f, "initial step `{s}` is not a step"),
            Violation::UnknownStep { transition, step } => {
                write!(f, "unknown step `{step}` in transition {transition}")
            }
            Violation::EmptySources(t) => write!(f, "transition {t} has no source steps"),
            Violation::EmptyTargets(t) => write!(f, "transition {t} has no target steps"),
            Violation::DuplicateSource { transition, step } => {
                write!(f, "step `{step}` listed twice among sources of transition {transition}")
            }
            Violation::DuplicateTarget { transition, step } => {
                write!(f, "step `{step}` listed twice among targets of transition {transition}")
            }
            Violation::Guard { transition, message } => write!(f, "guard of transition {transition}: {message}"),
            Violation::StepActionsNotTotal(s) => write!(f, "F not total: no action list for step `{s}`"),
            Violation::StepActionsUnknownStep(s) => write!(f, "action list given for unknown step `{s}`"),
            Violation::UnknownAction { step, action } => {
                write!(f, "unknown action `{action}` attached to step `{step}`")
            }
            Violation::Action { action, message } => write!(f, "action `{action}`: {message}"),
            Violation::UnknownFbd { action, fbd } => write!(f, "action `{action}` refers to unknown fbd `{fbd}`"),
            Violation::Fbd { fbd, message } => write!(f, "fbd `{fbd}`: {message}"),
            Violation::TimeOnBool(v) => write!(f, "time flag on boolean variable `{v}`"),
            Violation::Initializer { var, message } => write!(f, "initializer of `{var}`: {message}"),
        }
    }
}

fn check_ident(name: &str, out: &mut Vec<Violation>) {
    if !is_identifier(name) {
        out.push(Violation::BadIdentifier(name.to_string()));
    }
}

/// Checks every structural invariant of the model. An empty result means
/// the model is well formed.
pub fn validate(model: &SfcModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let env = model.var_env();

    let mut seen = BTreeSet::new();
    for v in &model.vars {
        check_ident(&v.name, &mut out);
        if !seen.insert(v.name.as_str()) {
            out.push(Violation::DuplicateVar(v.name.clone()));
        }
        if v.is_time && v.ty == Ty::Bool {
            out.push(Violation::TimeOnBool(v.name.clone()));
        }
        if let Some(init) = v.init {
            if init.ty() != v.ty {
                out.push(Violation::Initializer {
                    var: v.name.clone(),
                    message: format!("value of type {} for {} variable", init.ty(), v.ty),
                });
            } else if init.payload() > v.ty.max_payload() {
                out.push(Violation::Initializer { var: v.name.clone(), message: "value out of range".into() });
            }
        }
    }

    let mut steps = BTreeSet::new();
    for s in &model.steps {
        check_ident(s, &mut out);
        if !steps.insert(s.as_str()) {
            out.push(Violation::DuplicateStep(s.clone()));
        }
    }
    if model.initial.is_empty() {
        out.push(Violation::EmptyInitial);
    }
    for s in &model.initial {
        if !steps.contains(s.as_str()) {
            out.push(Violation::InitialNotStep(s.clone()));
        }
    }

    for (i, t) in model.transitions.iter().enumerate() {
        if t.sources.is_empty() {
            out.push(Violation::EmptySources(i));
        }
        if t.targets.is_empty() {
            out.push(Violation::EmptyTargets(i));
        }
        let mut src = BTreeSet::new();
        for s in &t.sources {
            if !steps.contains(s.as_str()) {
                out.push(Violation::UnknownStep { transition: i, step: s.clone() });
            }
            if !src.insert(s.as_str()) {
                out.push(Violation::DuplicateSource { transition: i, step: s.clone() });
            }
        }
        let mut tgt = BTreeSet::new();
        for s in &t.targets {
            if !steps.contains(s.as_str()) {
                out.push(Violation::UnknownStep { transition: i, step: s.clone() });
            }
            if !tgt.insert(s.as_str()) {
                out.push(Violation::DuplicateTarget { transition: i, step: s.clone() });
            }
        }
        if let Err(e) = t.guard.check_bool(&env) {
            out.push(Violation::Guard { transition: i, message: e.to_string() });
        }
    }

    let mut actions = BTreeSet::new();
    for a in &model.actions {
        check_ident(&a.id, &mut out);
        if !actions.insert(a.id.as_str()) {
            out.push(Violation::DuplicateAction(a.id.clone()));
        }
        match &a.effect {
            Effect::Assign(body) => {
                for stmt in body {
                    match env.get(&stmt.target) {
                        None => out.push(Violation::Action {
                            action: a.id.clone(),
                            message: format!("assignment to undeclared variable `{}`", stmt.target),
                        }),
                        Some(ty) => {
                            if let Err(e) = stmt.value.check_assignable(*ty, &env) {
                                out.push(Violation::Action { action: a.id.clone(), message: e.to_string() });
                            }
                        }
                    }
                }
            }
            Effect::Fbd(name) => {
                if model.fbd(name).is_none() {
                    out.push(Violation::UnknownFbd { action: a.id.clone(), fbd: name.clone() });
                }
            }
        }
    }

    for s in &model.steps {
        if !model.step_actions.contains_key(s) {
            out.push(Violation::StepActionsNotTotal(s.clone()));
        }
    }
    for (s, list) in &model.step_actions {
        if !steps.contains(s.as_str()) {
            out.push(Violation::StepActionsUnknownStep(s.clone()));
        }
        for a in list {
            if !actions.contains(a.as_str()) {
                out.push(Violation::UnknownAction { step: s.clone(), action: a.clone() });
            }
        }
    }

    let mut fbds = BTreeSet::new();
    for f in &model.fbds {
        check_ident(&f.name, &mut out);
        if !fbds.insert(f.name.as_str()) {
            out.push(Violation::DuplicateFbd(f.name.clone()));
        }
        if let Err(e) = f.check(&env) {
            out.push(Violation::Fbd { fbd: f.name.clone(), message: e.to_string() });
        }
    }

    out
}
