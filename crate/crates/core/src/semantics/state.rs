use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::expr::Memory;
use crate::model::{ActionId, SfcModel, StepId};

/// How the initial active-action list is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InitActions {
    /// Concatenation of `F(s)` over the initial steps.
    #[default]
    FromSteps,
    Empty,
}

impl fmt::Display for InitActions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitActions::FromSteps => "from-steps",
            InitActions::Empty => "empty",
        })
    }
}

impl FromStr for InitActions {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "from-steps" => Ok(InitActions::FromSteps),
            "empty" => Ok(InitActions::Empty),
            other => Err(format!("unknown init-actions mode `{other}`")),
        }
    }
}

/// A configuration `(m, a, s)`.
///
/// Equality compares memory and the step list exactly and the action list
/// as a multiset.
#[derive(Debug, Clone)]
pub struct SfcState {
    pub mem: Memory,
    pub active_steps: Vec<StepId>,
    pub active_actions: Vec<ActionId>,
}

impl SfcState {
    pub fn sorted_actions(&self) -> Vec<&ActionId> {
        let mut acts: Vec<&ActionId> = self.active_actions.iter().collect();
        acts.sort();
        acts
    }

    pub fn step_active(&self, s: &str) -> bool {
        self.active_steps.iter().any(|x| x == s)
    }

    pub fn action_active(&self, a: &str) -> bool {
        self.active_actions.iter().any(|x| x == a)
    }
}

impl PartialEq for SfcState {
    fn eq(&self, other: &Self) -> bool {
        self.mem == other.mem
            && self.active_steps == other.active_steps
            && self.sorted_actions() == other.sorted_actions()
    }
}

impl Eq for SfcState {}

impl Hash for SfcState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.mem.hash(state);
        self.active_steps.hash(state);
        self.sorted_actions().hash(state);
    }
}

/// Canonical text: `mem{x=5,y=1} steps[Init] acts[A_Init]`.
impl fmt::Display for SfcState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mem: Vec<String> = self.mem.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let acts: Vec<&str> = self.sorted_actions().into_iter().map(String::as_str).collect();
        write!(f, "mem{{{}}} steps[{}] acts[{}]", mem.join(","), self.active_steps.join(","), acts.join(","))
    }
}

/// One applicable rule of the operational semantics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleInstance {
    Exec(ActionId),
    Trans(usize),
    React(StepId),
}

impl fmt::Display for RuleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleInstance::Exec(a) => write!(f, "exec({a})"),
            RuleInstance::Trans(t) => write!(f, "trans({t})"),
            RuleInstance::React(s) => write!(f, "react({s})"),
        }
    }
}

/// Default (or declared) memory, initial steps and their actions.
pub fn init_state(model: &SfcModel, mode: InitActions) -> SfcState {
    let mem = model.vars.iter().map(|v| (v.name.clone(), v.init.unwrap_or_else(|| v.ty.default_value()))).collect();
    let active_actions = match mode {
        InitActions::FromSteps => model.actions_of_all(&model.initial).cloned().collect(),
        InitActions::Empty => Vec::new(),
    };
    SfcState { mem, active_steps: model.initial.clone(), active_actions }
}
