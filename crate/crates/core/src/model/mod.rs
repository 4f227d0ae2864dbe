//! The syntactic SFC structure: steps, initial steps, guarded transitions,
//! action blocks, the step-to-action mapping and typed variables.

mod print;
mod validate;

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::expr::{Assignment, Expr, Ty, Value, VarEnv};
use crate::fbd::Fbd;

pub use print::canonical_text;
pub use validate::{validate, Violation};

pub type StepId = String;
pub type ActionId = String;

/// Returns true for `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub ty: Ty,
    /// Marks a variable that models elapsed time. It has no special
    /// operational rule.
    pub is_time: bool,
    /// Declared initial value; `None` means the type default.
    pub init: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub sources: Vec<StepId>,
    pub guard: Expr,
    pub targets: Vec<StepId>,
    pub priority: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Effect {
    /// Sequentially executed assignment list.
    Assign(Vec<Assignment>),
    /// Body given by the named function block diagram.
    Fbd(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionBlock {
    pub id: ActionId,
    pub effect: Effect,
}

/// An SFC `(S, S0, T, A, F, V, ValV)`.
///
/// Parsed models keep steps, variables, actions and diagrams sorted by name;
/// transitions keep their source order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SfcModel {
    pub vars: Vec<VarDecl>,
    pub steps: Vec<StepId>,
    pub initial: Vec<StepId>,
    pub transitions: Vec<Transition>,
    pub actions: Vec<ActionBlock>,
    pub step_actions: BTreeMap<StepId, Vec<ActionId>>,
    pub fbds: Vec<Fbd>,
}

impl SfcModel {
    pub fn var_env(&self) -> VarEnv {
        self.vars.iter().map(|v| (v.name.clone(), v.ty)).collect()
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn action(&self, id: &str) -> Option<&ActionBlock> {
        self.actions.iter().find(|a| a.id == id)
    }

    pub fn fbd(&self, name: &str) -> Option<&Fbd> {
        self.fbds.iter().find(|f| f.name == name)
    }

    pub fn has_step(&self, id: &str) -> bool {
        self.steps.iter().any(|s| s == id)
    }

    pub fn has_action(&self, id: &str) -> bool {
        self.actions.iter().any(|a| a.id == id)
    }

    /// `F(step)`; empty for unknown steps.
    pub fn actions_of(&self, step: &str) -> &[ActionId] {
        self.step_actions.get(step).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Concatenation of `F(s)` over `steps`, in order.
    pub fn actions_of_all<'a>(&'a self, steps: &'a [StepId]) -> impl Iterator<Item = &'a ActionId> + 'a {
        steps.iter().flat_map(move |s| self.actions_of(s).iter())
    }

    /// Indices of transitions that have `step` among their sources.
    pub fn outgoing(&self, step: &str) -> impl Iterator<Item = usize> + '_ {
        let step = step.to_string();
        self.transitions.iter().enumerate().filter(move |(_, t)| t.sources.contains(&step)).map(|(i, _)| i)
    }

    /// Variables written by an action (assignment targets or diagram writes).
    pub fn written_vars(&self, action: &ActionBlock) -> Vec<String> {
        match &action.effect {
            Effect::Assign(body) => {
                let mut out: Vec<String> = body.iter().map(|a| a.target.clone()).collect();
                out.sort();
                out.dedup();
                out
            }
            Effect::Fbd(name) => self.fbd(name).map(|f| f.written_vars()).unwrap_or_default(),
        }
    }

    /// Hex SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        model_digest(self)
    }
}

/// Digest of the canonical serialization, bound into certificates.
pub fn model_digest(model: &SfcModel) -> String {
    text_digest(&canonical_text(model))
}

/// Hex SHA-256 of `text`.
pub fn text_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
