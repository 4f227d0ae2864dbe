//! Invariant properties over SFC states.

use std::collections::BTreeSet;
use std::fmt;

use crate::expr::{eval_bool, Expr, ExprError};
use crate::semantics::SfcState;

/// Property formula. Arithmetic atoms are boolean expressions over the
/// model variables; activity atoms talk about active steps and actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    Arith(Expr),
    Step(String),
    Action(String),
    /// Every active action is one of the listed ones.
    ActionsWithin(BTreeSet<String>),
    /// Every active step is one of the listed ones.
    StepsWithin(BTreeSet<String>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    /// Conjunction of a list; `true` when empty.
    pub fn all(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::Const(true),
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    /// Concrete truth value in `state`.
    pub fn holds(&self, state: &SfcState) -> Result<bool, ExprError> {
        Ok(match self {
            Formula::Const(b) => *b,
            Formula::Arith(e) => eval_bool(e, &state.mem)?,
            Formula::Step(s) => state.step_active(s),
            Formula::Action(a) => state.action_active(a),
            Formula::ActionsWithin(set) => state.active_actions.iter().all(|a| set.contains(a)),
            Formula::StepsWithin(set) => state.active_steps.iter().all(|s| set.contains(s)),
            Formula::Not(a) => !a.holds(state)?,
            Formula::And(a, b) => a.holds(state)? && b.holds(state)?,
            Formula::Or(a, b) => a.holds(state)? || b.holds(state)?,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Not(..) => 3,
            _ => 4,
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Formula, min: u8) -> fmt::Result {
    if child.precedence() < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

fn write_set(f: &mut fmt::Formatter<'_>, kw: &str, set: &BTreeSet<String>) -> fmt::Result {
    let items: Vec<&str> = set.iter().map(String::as_str).collect();
    write!(f, "{kw} {{{}}}", items.join(", "))
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Arith(e @ (Expr::And(..) | Expr::Or(..))) => write!(f, "({e})"),
            Formula::Arith(e) => write!(f, "{e}"),
            Formula::Step(s) => write!(f, "step({s})"),
            Formula::Action(a) => write!(f, "action({a})"),
            Formula::ActionsWithin(set) => write_set(f, "actions_within", set),
            Formula::StepsWithin(set) => write_set(f, "steps_within", set),
            Formula::Not(a) => {
                f.write_str("!")?;
                write_child(f, a, 3)
            }
            Formula::And(a, b) => {
                write_child(f, a, 2)?;
                f.write_str(" && ")?;
                write_child(f, b, 3)
            }
            Formula::Or(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(" || ")?;
                write_child(f, b, 2)
            }
        }
    }
}

/// A named invariant: `invariant NAME : always (FORMULA);`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Property {
    pub name: String,
    pub formula: Formula,
}

impl Property {
    pub fn new(name: &str, formula: Formula) -> Self {
        Property { name: name.to_string(), formula }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invariant {} : always ({});", self.name, self.formula)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{CmpOp, IntTy};

    #[test]
    fn display_parenthesizes_arith_connectives() {
        let x = Expr::cmp(CmpOp::Le, IntTy::U16, Expr::var("x"), Expr::Int(10));
        let y = Expr::cmp(CmpOp::Lt, IntTy::U16, Expr::Int(0), Expr::var("y"));
        let f = Formula::and(Formula::Arith(Expr::or(x, y)), Formula::not(Formula::Step("Init".into())));
        assert_eq!(f.to_string(), "(x <= 10 || 0 < y) && !step(Init)");
    }

    #[test]
    fn conjuncts_flatten() {
        let f =
            Formula::and(Formula::and(Formula::Step("A".into()), Formula::Action("B".into())), Formula::Const(true));
        assert_eq!(f.conjuncts().len(), 3);
        assert_eq!(Formula::all([]), Formula::Const(true));
    }
}
