use std::collections::BTreeMap;

use thiserror::Error;

use super::state::{init_state, InitActions, RuleInstance, SfcState};
use crate::expr::{apply_assignments, eval_bool, Assignment, Memory};
use crate::fbd::{fbd_to_action, CompiledFbd};
use crate::model::{Effect, SfcModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("rule {rule} not applicable: {reason}")]
    NotApplicable { rule: RuleInstance, reason: String },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
}

#[derive(Debug, Clone)]
enum CompiledEffect {
    Assign(Vec<Assignment>),
    Fbd(Box<CompiledFbd>),
}

/// Executable view of a model: action effects compiled once.
#[derive(Debug, Clone)]
pub struct Machine<'m> {
    model: &'m SfcModel,
    effects: BTreeMap<String, CompiledEffect>,
    init_actions: InitActions,
}

impl<'m> Machine<'m> {
    pub fn new(model: &'m SfcModel) -> Result<Self, SemanticsError> {
        let env = model.var_env();
        let mut effects = BTreeMap::new();
        for a in &model.actions {
            let compiled = match &a.effect {
                Effect::Assign(body) => CompiledEffect::Assign(body.clone()),
                Effect::Fbd(name) => {
                    let f = model.fbd(name).ok_or_else(|| SemanticsError::Eval(format!("unknown fbd `{name}`")))?;
                    let c = fbd_to_action(f, &env).map_err(|e| SemanticsError::Eval(e.to_string()))?;
                    CompiledEffect::Fbd(Box::new(c))
                }
            };
            effects.insert(a.id.clone(), compiled);
        }
        Ok(Machine { model, effects, init_actions: InitActions::default() })
    }

    pub fn with_init_actions(mut self, mode: InitActions) -> Self {
        self.init_actions = mode;
        self
    }

    pub fn model(&self) -> &'m SfcModel {
        self.model
    }

    pub fn init_actions(&self) -> InitActions {
        self.init_actions
    }

    pub fn init_state(&self) -> SfcState {
        init_state(self.model, self.init_actions)
    }

    /// Runs the body of action `a` on `mem`.
    pub fn apply_effect(&self, a: &str, mem: &Memory) -> Result<Memory, SemanticsError> {
        match self.effects.get(a) {
            None => Err(SemanticsError::UnknownAction(a.to_string())),
            Some(CompiledEffect::Assign(body)) => {
                apply_assignments(body, mem).map_err(|e| SemanticsError::Eval(e.to_string()))
            }
            Some(CompiledEffect::Fbd(f)) => f.apply(mem).map_err(|e| SemanticsError::Eval(e.to_string())),
        }
    }

    fn guard(&self, t: usize, mem: &Memory) -> Result<bool, SemanticsError> {
        eval_bool(&self.model.transitions[t].guard, mem).map_err(|e| SemanticsError::Eval(e.to_string()))
    }

    pub fn execute_action(&self, c: &SfcState, a: &str) -> Result<SfcState, SemanticsError> {
        if !c.action_active(a) {
            return Err(SemanticsError::NotApplicable {
                rule: RuleInstance::Exec(a.to_string()),
                reason: "action is not active".into(),
            });
        }
        Ok(SfcState {
            mem: self.apply_effect(a, &c.mem)?,
            active_steps: c.active_steps.clone(),
            active_actions: c.active_actions.iter().filter(|x| *x != a).cloned().collect(),
        })
    }

    pub fn step_transition(&self, c: &SfcState, t: usize) -> Result<SfcState, SemanticsError> {
        let rule = RuleInstance::Trans(t);
        let na = |reason: String| SemanticsError::NotApplicable { rule: rule.clone(), reason };
        let tr = self.model.transitions.get(t).ok_or_else(|| na("no such transition".into()))?;
        if let Some(s) = tr.sources.iter().find(|s| !c.step_active(s)) {
            return Err(na(format!("source step `{s}` is not active")));
        }
        if !self.guard(t, &c.mem)? {
            return Err(na("guard is false".into()));
        }
        if let Some(a) = self.model.actions_of_all(&tr.sources).find(|a| c.action_active(a)) {
            return Err(na(format!("action `{a}` of a source step is still pending")));
        }
        let mut steps: Vec<String> = c.active_steps.iter().filter(|s| !tr.sources.contains(s)).cloned().collect();
        for s in &tr.targets {
            if !steps.contains(s) {
                steps.push(s.clone());
            }
        }
        let mut actions: Vec<String> = self.model.actions_of_all(&tr.targets).cloned().collect();
        actions.extend(c.active_actions.iter().cloned());
        Ok(SfcState { mem: c.mem.clone(), active_steps: steps, active_actions: actions })
    }

    pub fn reactivate(&self, c: &SfcState, s: &str) -> Result<SfcState, SemanticsError> {
        let rule = RuleInstance::React(s.to_string());
        if !c.step_active(s) {
            return Err(SemanticsError::NotApplicable { rule, reason: "step is not active".into() });
        }
        for t in self.model.outgoing(s) {
            if self.guard(t, &c.mem)? {
                return Err(SemanticsError::NotApplicable {
                    rule,
                    reason: format!("guard of outgoing transition {t} holds"),
                });
            }
        }
        let mut actions: Vec<String> = self.model.actions_of(s).to_vec();
        actions.extend(c.active_actions.iter().cloned());
        Ok(SfcState { mem: c.mem.clone(), active_steps: c.active_steps.clone(), active_actions: actions })
    }

    pub fn apply(&self, c: &SfcState, rule: &RuleInstance) -> Result<SfcState, SemanticsError> {
        match rule {
            RuleInstance::Exec(a) => self.execute_action(c, a),
            RuleInstance::Trans(t) => self.step_transition(c, *t),
            RuleInstance::React(s) => self.reactivate(c, s),
        }
    }

    /// Every one-step successor with its rule: executions (distinct actions
    /// in list order), then transitions by index, then reactivations in
    /// active-step order.
    pub fn successors(&self, c: &SfcState) -> Result<Vec<(RuleInstance, SfcState)>, SemanticsError> {
        let mut candidates = Vec::new();
        let mut seen = Vec::new();
        for a in &c.active_actions {
            if !seen.contains(&a) {
                seen.push(a);
                candidates.push(RuleInstance::Exec(a.clone()));
            }
        }
        candidates.extend((0..self.model.transitions.len()).map(RuleInstance::Trans));
        candidates.extend(c.active_steps.iter().cloned().map(RuleInstance::React));
        let mut out = Vec::new();
        for r in candidates {
            match self.apply(c, &r) {
                Ok(next) => out.push((r, next)),
                Err(SemanticsError::NotApplicable { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}
