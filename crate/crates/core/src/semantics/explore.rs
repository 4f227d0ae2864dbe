use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::machine::{Machine, SemanticsError};
use super::state::{RuleInstance, SfcState};
use crate::expr::ExprError;
use crate::property::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    /// Maximum number of rule applications from the initial state.
    pub depth: usize,
    /// Maximum number of distinct states kept.
    pub state_budget: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { depth: 40, state_budget: 200_000 }
    }
}

/// Result of bounded breadth-first exploration.
#[derive(Debug, Clone)]
pub struct Exploration {
    /// Distinct states in discovery order; index 0 is the initial state.
    pub states: IndexSet<SfcState>,
    /// BFS depth of each state, parallel to `states`.
    pub depth: Vec<usize>,
    /// True when the frontier emptied before the depth bound.
    pub saturated: bool,
}

#[derive(Debug, Clone, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("state budget of {budget} exceeded after {} states", .partial.states.len())]
    BudgetExceeded { budget: usize, partial: Box<Exploration> },
}

impl Machine<'_> {
    /// Breadth-first closure of `successors` up to `opts.depth` steps.
    pub fn reachable_bounded(&self, opts: ExploreOptions) -> Result<Exploration, ExploreError> {
        let init = self.init_state();
        let mut states = IndexSet::new();
        states.insert(init);
        let mut depth = vec![0];
        let mut frontier: Vec<usize> = vec![0];
        let mut level = 0;
        while !frontier.is_empty() && level < opts.depth {
            let expanded: Vec<Vec<(RuleInstance, SfcState)>> =
                frontier.par_iter().map(|&i| self.successors(&states[i])).collect::<Result<_, _>>()?;
            level += 1;
            let mut next = Vec::new();
            for succ in expanded {
                for (_, s) in succ {
                    let (idx, fresh) = states.insert_full(s);
                    if fresh {
                        depth.push(level);
                        next.push(idx);
                        if states.len() > opts.state_budget {
                            return Err(ExploreError::BudgetExceeded {
                                budget: opts.state_budget,
                                partial: Box::new(Exploration { states, depth, saturated: false }),
                            });
                        }
                    }
                }
            }
            frontier = next;
        }
        Ok(Exploration { states, depth, saturated: frontier.is_empty() })
    }

    /// First explored state violating `f`, if any.
    pub fn find_violation<'a>(&self, ex: &'a Exploration, f: &Formula) -> Result<Option<&'a SfcState>, ExprError> {
        for s in &ex.states {
            if !f.holds(s)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }

    /// Runs one path of at most `max_steps` rule applications.
    pub fn run_trace(&self, scheduler: Scheduler, max_steps: usize) -> Result<Trace, SemanticsError> {
        let mut rng = match scheduler {
            Scheduler::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        let initial = self.init_state();
        let mut cur = initial.clone();
        let mut steps = Vec::new();
        for _ in 0..max_steps {
            let mut succ = self.successors(&cur)?;
            if succ.is_empty() {
                break;
            }
            let pick = match scheduler {
                Scheduler::Fixed => 0,
                Scheduler::Priority => self.priority_choice(&succ),
                Scheduler::Random(_) => rng.as_mut().unwrap().gen_range(0..succ.len()),
            };
            let (rule, next) = succ.swap_remove(pick);
            cur = next.clone();
            steps.push((rule, next));
        }
        Ok(Trace { initial, steps })
    }

    fn priority_choice(&self, succ: &[(RuleInstance, SfcState)]) -> usize {
        let rank = |r: &RuleInstance| match r {
            RuleInstance::Exec(_) => (0, 0u64, 0usize),
            RuleInstance::Trans(t) => {
                let p = self.model().transitions[*t].priority.map(u64::from).unwrap_or(u64::MAX);
                (1, p, *t)
            }
            RuleInstance::React(_) => (2, 0, 0),
        };
        // Ties keep enumeration order, which already follows the contract.
        (0..succ.len()).min_by_key(|&i| (rank(&succ[i].0), i)).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    /// Executions, then transitions by ascending priority, then reactivations.
    Priority,
    /// Always the first enumerated successor.
    Fixed,
    /// Uniform choice from a seeded generator.
    Random(u64),
}

impl FromStr for Scheduler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "priority" => Ok(Scheduler::Priority),
            "fixed" => Ok(Scheduler::Fixed),
            "random" => Ok(Scheduler::Random(0)),
            other => Err(format!("unknown scheduler `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: SfcState,
    pub steps: Vec<(RuleInstance, SfcState)>,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "0: {}", self.initial)?;
        for (i, (r, s)) in self.steps.iter().enumerate() {
            writeln!(f, "{}: {r} -> {s}", i + 1)?;
        }
        Ok(())
    }
}
