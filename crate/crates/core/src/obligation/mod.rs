//! Proof obligations of an inductive invariant argument.
//!
//! Everything here is shared by the verifier, which searches for proofs, and
//! the certificate checker, which re-derives the same cubes from the
//! embedded model and only replays the witnesses it is given.
//!
//! Activity of steps and actions is abstracted by boolean atoms. Besides one
//! atom per declared step and action there are two atoms for "some
//! undeclared step/action is active", which keeps the abstraction exact on
//! every configuration, not only reachable ones.

mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use tree::{ConjunctCase, Entry, HypCase, ProofTree, RuleCase};

use crate::expr::{normalize_unbounded, with_bounds, wp_assignments, Expr, ExprError, LinearConstraint, MAX_DNF_CUBES};
use crate::model::{Effect, SfcModel};
use crate::property::Formula;
use crate::semantics::{RuleInstance, SfcState};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoolAtom {
    Step(String),
    Action(String),
    ForeignStep,
    ForeignAction,
}

impl fmt::Display for BoolAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolAtom::Step(s) => write!(f, "step({s})"),
            BoolAtom::Action(a) => write!(f, "action({a})"),
            BoolAtom::ForeignStep => f.write_str("step(<undeclared>)"),
            BoolAtom::ForeignAction => f.write_str("action(<undeclared>)"),
        }
    }
}

/// Formula over boolean atoms and arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sym {
    Const(bool),
    Atom(BoolAtom),
    Arith(Expr),
    Not(Box<Sym>),
    And(Vec<Sym>),
    Or(Vec<Sym>),
}

impl Sym {
    fn not(s: Sym) -> Sym {
        Sym::Not(Box::new(s))
    }

    fn arith_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Sym::Const(_) | Sym::Atom(_) => {}
            Sym::Arith(e) => e.vars_into(out),
            Sym::Not(a) => a.arith_vars(out),
            Sym::And(xs) | Sym::Or(xs) => xs.iter().for_each(|x| x.arith_vars(out)),
        }
    }

    /// Truth value in a concrete configuration of `model`.
    pub fn eval(&self, model: &SfcModel, state: &SfcState) -> Result<bool, ExprError> {
        Ok(match self {
            Sym::Const(b) => *b,
            Sym::Atom(BoolAtom::Step(s)) => state.step_active(s),
            Sym::Atom(BoolAtom::Action(a)) => state.action_active(a),
            Sym::Atom(BoolAtom::ForeignStep) => state.active_steps.iter().any(|s| !model.has_step(s)),
            Sym::Atom(BoolAtom::ForeignAction) => state.active_actions.iter().any(|a| !model.has_action(a)),
            Sym::Arith(e) => crate::expr::eval_bool(e, &state.mem)?,
            Sym::Not(a) => !a.eval(model, state)?,
            Sym::And(xs) => {
                for x in xs {
                    if !x.eval(model, state)? {
                        return Ok(false);
                    }
                }
                true
            }
            Sym::Or(xs) => {
                for x in xs {
                    if x.eval(model, state)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, xs: &[Sym], op: &str, empty: &str| {
            if xs.is_empty() {
                return f.write_str(empty);
            }
            f.write_str("(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(op)?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        match self {
            Sym::Const(b) => write!(f, "{b}"),
            Sym::Atom(a) => write!(f, "{a}"),
            Sym::Arith(e) => write!(f, "{e}"),
            Sym::Not(a) => write!(f, "!{a}"),
            Sym::And(xs) => join(f, xs, " && ", "true"),
            Sym::Or(xs) => join(f, xs, " || ", "false"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObligationError {
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("case analysis exceeds {MAX_DNF_CUBES} cases")]
    TooLarge,
    #[error("effect of action `{action}` is opaque and writes {}", .vars.join(", "))]
    Opaque { action: String, vars: Vec<String> },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Exact translation of a property formula.
pub fn lower(model: &SfcModel, f: &Formula) -> Result<Sym, ObligationError> {
    let undeclared = |kind, name: &String| ObligationError::Undeclared { kind, name: name.clone() };
    Ok(match f {
        Formula::Const(b) => Sym::Const(*b),
        Formula::Arith(e) => {
            let env = model.var_env();
            e.check_bool(&env)?;
            Sym::Arith(e.clone())
        }
        Formula::Step(s) if model.has_step(s) => Sym::Atom(BoolAtom::Step(s.clone())),
        Formula::Step(s) => return Err(undeclared("step", s)),
        Formula::Action(a) if model.has_action(a) => Sym::Atom(BoolAtom::Action(a.clone())),
        Formula::Action(a) => return Err(undeclared("action", a)),
        Formula::ActionsWithin(set) => {
            if let Some(a) = set.iter().find(|a| !model.has_action(a)) {
                return Err(undeclared("action", a));
            }
            let mut parts: Vec<Sym> = model
                .actions
                .iter()
                .filter(|a| !set.contains(&a.id))
                .map(|a| Sym::not(Sym::Atom(BoolAtom::Action(a.id.clone()))))
                .collect();
            parts.push(Sym::not(Sym::Atom(BoolAtom::ForeignAction)));
            Sym::And(parts)
        }
        Formula::StepsWithin(set) => {
            if let Some(s) = set.iter().find(|s| !model.has_step(s)) {
                return Err(undeclared("step", s));
            }
            let mut parts: Vec<Sym> = model
                .steps
                .iter()
                .filter(|s| !set.contains(*s))
                .map(|s| Sym::not(Sym::Atom(BoolAtom::Step(s.clone()))))
                .collect();
            parts.push(Sym::not(Sym::Atom(BoolAtom::ForeignStep)));
            Sym::And(parts)
        }
        Formula::Not(a) => Sym::not(lower(model, a)?),
        Formula::And(a, b) => Sym::And(vec![lower(model, a)?, lower(model, b)?]),
        Formula::Or(a, b) => Sym::Or(vec![lower(model, a)?, lower(model, b)?]),
    })
}

/// True when the invariant argument is not needed at all.
pub fn is_trivial(f: &Formula) -> bool {
    *f == Formula::Const(true)
}

/// The conjuncts actually proved for `f`: its top-level conjuncts followed
/// by "no undeclared action is active" and "no undeclared step is active".
pub fn invariant_conjuncts(model: &SfcModel, f: &Formula) -> Result<Vec<Sym>, ObligationError> {
    let mut out = f.conjuncts().into_iter().map(|c| lower(model, c)).collect::<Result<Vec<_>, _>>()?;
    out.push(Sym::not(Sym::Atom(BoolAtom::ForeignAction)));
    out.push(Sym::not(Sym::Atom(BoolAtom::ForeignStep)));
    Ok(out)
}

/// All rule schemata: one execution per declared action, one firing per
/// transition, one reactivation per declared step.
pub fn rule_instances(model: &SfcModel) -> Vec<RuleInstance> {
    let mut out: Vec<RuleInstance> = model.actions.iter().map(|a| RuleInstance::Exec(a.id.clone())).collect();
    out.sort();
    out.extend((0..model.transitions.len()).map(RuleInstance::Trans));
    let mut steps: Vec<RuleInstance> = model.steps.iter().map(|s| RuleInstance::React(s.clone())).collect();
    steps.sort();
    out.extend(steps);
    out
}

/// Applicability condition of `rule` on the pre-state.
pub fn precondition(model: &SfcModel, rule: &RuleInstance) -> Result<Sym, ObligationError> {
    Ok(match rule {
        RuleInstance::Exec(a) => Sym::Atom(BoolAtom::Action(a.clone())),
        RuleInstance::Trans(i) => {
            let t = model
                .transitions
                .get(*i)
                .ok_or_else(|| ObligationError::Undeclared { kind: "transition", name: i.to_string() })?;
            let mut parts: Vec<Sym> = t.sources.iter().map(|s| Sym::Atom(BoolAtom::Step(s.clone()))).collect();
            parts.push(Sym::Arith(t.guard.clone()));
            let pending: BTreeSet<&String> = model.actions_of_all(&t.sources).collect();
            parts.extend(pending.into_iter().map(|b| Sym::not(Sym::Atom(BoolAtom::Action(b.clone())))));
            Sym::And(parts)
        }
        RuleInstance::React(s) => {
            let mut parts = vec![Sym::Atom(BoolAtom::Step(s.clone()))];
            parts.extend(model.outgoing(s).map(|t| Sym::not(Sym::Arith(model.transitions[t].guard.clone()))));
            Sym::And(parts)
        }
    })
}

enum Update<'a> {
    Atoms(BTreeMap<BoolAtom, bool>),
    Assign(&'a str, &'a [crate::expr::Assignment]),
    Framed(&'a str, Vec<String>),
}

fn substitute(
    s: &Sym,
    atoms: &BTreeMap<BoolAtom, bool>,
    arith: &dyn Fn(&Expr) -> Result<Expr, ObligationError>,
) -> Result<Sym, ObligationError> {
    Ok(match s {
        Sym::Const(b) => Sym::Const(*b),
        Sym::Atom(a) => match atoms.get(a) {
            Some(b) => Sym::Const(*b),
            None => Sym::Atom(a.clone()),
        },
        Sym::Arith(e) => Sym::Arith(arith(e)?),
        Sym::Not(a) => Sym::not(substitute(a, atoms, arith)?),
        Sym::And(xs) => Sym::And(xs.iter().map(|x| substitute(x, atoms, arith)).collect::<Result<_, _>>()?),
        Sym::Or(xs) => Sym::Or(xs.iter().map(|x| substitute(x, atoms, arith)).collect::<Result<_, _>>()?),
    })
}

/// `s` evaluated in the post-state of `rule`, as a formula over the
/// pre-state. Fails for diagram effects that write a variable `s` reads.
pub fn post(model: &SfcModel, rule: &RuleInstance, s: &Sym) -> Result<Sym, ObligationError> {
    let update = match rule {
        RuleInstance::Exec(a) => {
            let block =
                model.action(a).ok_or_else(|| ObligationError::Undeclared { kind: "action", name: a.clone() })?;
            match &block.effect {
                Effect::Assign(body) => Update::Assign(a, body),
                Effect::Fbd(_) => Update::Framed(a, model.written_vars(block)),
            }
        }
        RuleInstance::Trans(i) => {
            let t = model
                .transitions
                .get(*i)
                .ok_or_else(|| ObligationError::Undeclared { kind: "transition", name: i.to_string() })?;
            let mut atoms = BTreeMap::new();
            for src in &t.sources {
                atoms.insert(BoolAtom::Step(src.clone()), false);
            }
            for tgt in &t.targets {
                atoms.insert(BoolAtom::Step(tgt.clone()), true);
            }
            for b in model.actions_of_all(&t.targets) {
                atoms.insert(BoolAtom::Action(b.clone()), true);
            }
            Update::Atoms(atoms)
        }
        RuleInstance::React(step) => {
            Update::Atoms(model.actions_of(step).iter().map(|b| (BoolAtom::Action(b.clone()), true)).collect())
        }
    };
    match update {
        Update::Atoms(atoms) => substitute(s, &atoms, &|e| Ok(e.clone())),
        Update::Assign(a, body) => {
            let atoms = BTreeMap::from([(BoolAtom::Action(a.to_string()), false)]);
            substitute(s, &atoms, &|e| Ok(wp_assignments(body, e)))
        }
        Update::Framed(a, written) => {
            let mut read = BTreeSet::new();
            s.arith_vars(&mut read);
            let clash: Vec<String> = written.into_iter().filter(|v| read.contains(v)).collect();
            if !clash.is_empty() {
                return Err(ObligationError::Opaque { action: a.to_string(), vars: clash });
            }
            let atoms = BTreeMap::from([(BoolAtom::Action(a.to_string()), false)]);
            substitute(s, &atoms, &|e| Ok(e.clone()))
        }
    }
}

/// A conjunction of atom literals and linear constraints.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymCube {
    pub lits: BTreeMap<BoolAtom, bool>,
    pub lin: Vec<LinearConstraint>,
}

impl SymCube {
    /// Conjunction, or `None` when the literals conflict.
    fn meet(&self, other: &SymCube) -> Option<SymCube> {
        let mut out = self.clone();
        for (a, v) in &other.lits {
            match out.lits.get(a) {
                Some(w) if w != v => return None,
                _ => {
                    out.lits.insert(a.clone(), *v);
                }
            }
        }
        for c in &other.lin {
            if !out.lin.contains(c) {
                out.lin.push(c.clone());
            }
        }
        Some(out)
    }

    /// True when some atom is fixed to different values in the two cubes.
    pub fn clashes(&self, other: &SymCube) -> bool {
        other.lits.iter().any(|(a, v)| self.lits.get(a).is_some_and(|w| w != v))
    }
}

impl fmt::Display for SymCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> =
            self.lits.iter().map(|(a, v)| if *v { a.to_string() } else { format!("!{a}") }).collect();
        parts.extend(self.lin.iter().map(ToString::to_string));
        if parts.is_empty() {
            f.write_str("true")
        } else {
            f.write_str(&parts.join(" && "))
        }
    }
}

/// Disjunctive normal form of `s` (of its negation when `positive` is
/// false). Cubes with conflicting literals are dropped.
pub fn dnf(s: &Sym, positive: bool) -> Result<Vec<SymCube>, ObligationError> {
    let union = |mut acc: Vec<SymCube>, more: Vec<SymCube>| -> Result<Vec<SymCube>, ObligationError> {
        for c in more {
            if !acc.contains(&c) {
                acc.push(c);
            }
        }
        if acc.len() > MAX_DNF_CUBES {
            return Err(ObligationError::TooLarge);
        }
        Ok(acc)
    };
    let product = |acc: Vec<SymCube>, more: Vec<SymCube>| -> Result<Vec<SymCube>, ObligationError> {
        if acc.len().saturating_mul(more.len()) > MAX_DNF_CUBES {
            return Err(ObligationError::TooLarge);
        }
        let mut out = Vec::new();
        for x in &acc {
            for y in &more {
                if let Some(c) = x.meet(y) {
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        Ok(out)
    };
    match s {
        Sym::Const(b) => Ok(if *b == positive { vec![SymCube::default()] } else { vec![] }),
        Sym::Atom(a) => Ok(vec![SymCube { lits: BTreeMap::from([(a.clone(), positive)]), lin: vec![] }]),
        Sym::Arith(e) => {
            let e = if positive { e.clone() } else { Expr::not(e.clone()) };
            let cubes = normalize_unbounded(&e).map_err(|err| match err {
                ExprError::Fragment(m) if m.contains("too large") => ObligationError::TooLarge,
                other => other.into(),
            })?;
            Ok(cubes.into_iter().map(|lin| SymCube { lits: BTreeMap::new(), lin }).collect())
        }
        Sym::Not(a) => dnf(a, !positive),
        Sym::And(xs) | Sym::Or(xs) => {
            let conj = matches!(s, Sym::And(_)) == positive;
            let mut acc = if conj { vec![SymCube::default()] } else { vec![] };
            for x in xs {
                let d = dnf(x, positive)?;
                acc = if conj { product(acc, d)? } else { union(acc, d)? };
            }
            Ok(acc)
        }
    }
}

/// Case split of the hypothesis `conjuncts && precondition(rule)`.
pub fn hypothesis_cubes(
    model: &SfcModel,
    conjuncts: &[Sym],
    rule: &RuleInstance,
) -> Result<Vec<SymCube>, ObligationError> {
    let mut parts = conjuncts.to_vec();
    parts.push(precondition(model, rule)?);
    dnf(&Sym::And(parts), true)
}

/// Cases in which `conjunct` fails after `rule`.
pub fn negated_conclusion_cubes(
    model: &SfcModel,
    conjunct: &Sym,
    rule: &RuleInstance,
) -> Result<Vec<SymCube>, ObligationError> {
    dnf(&post(model, rule, conjunct)?, false)
}

/// The arithmetic part of a cube with width bounds attached.
pub fn arith_cube(model: &SfcModel, cube: &SymCube) -> Result<Vec<LinearConstraint>, ObligationError> {
    Ok(with_bounds(cube.lin.clone(), &model.var_env())?)
}

/// Arithmetic of a hypothesis case together with one failure case.
pub fn combined_cube(model: &SfcModel, hyp: &SymCube, neg: &SymCube) -> Result<Vec<LinearConstraint>, ObligationError> {
    let mut lin = hyp.lin.clone();
    for c in &neg.lin {
        if !lin.contains(c) {
            lin.push(c.clone());
        }
    }
    Ok(with_bounds(lin, &model.var_env())?)
}
