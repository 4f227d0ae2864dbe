//! Inductive invariant proofs.
//!
//! The verifier is not trusted: a `Proved` result carries a [`ProofTree`]
//! whose leaves are checked again by the certificate checker.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{Memory, Value};
use crate::lia::{decide_sat_with, Assignment, LiaError, LiaOptions, SatResult};
use crate::model::SfcModel;
use crate::obligation::{
    arith_cube, combined_cube, dnf, hypothesis_cubes, invariant_conjuncts, is_trivial, lower, negated_conclusion_cubes,
    rule_instances, BoolAtom, ConjunctCase, Entry, HypCase, ObligationError, ProofTree, RuleCase, Sym, SymCube,
};
use crate::property::{Formula, Property};
use crate::semantics::{init_state, InitActions, RuleInstance, SfcState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub lia: LiaOptions,
    pub init_actions: InitActions,
    /// Discharge rule cases on the rayon pool.
    pub parallel: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { lia: LiaOptions::default(), init_actions: InitActions::default(), parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyResult {
    Proved(ProofTree),
    Refuted(Refutation),
    Undecided(Undecided),
}

impl VerifyResult {
    pub fn is_proved(&self) -> bool {
        matches!(self, VerifyResult::Proved(_))
    }

    pub fn verdict(&self) -> &'static str {
        match self {
            VerifyResult::Proved(_) => "Proved",
            VerifyResult::Refuted(_) => "Refuted",
            VerifyResult::Undecided(_) => "Undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refutation {
    /// The initial configuration violates a conjunct.
    Base { conjunct: String, state: SfcState },
    /// The property is not inductive. Says nothing about reachability.
    Inductive(Counterexample),
}

impl fmt::Display for Refutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Refutation::Base { conjunct, state } => write!(f, "initial state {state} violates {conjunct}"),
            Refutation::Inductive(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub rule: RuleInstance,
    pub conjunct: String,
    pub literals: BTreeMap<BoolAtom, bool>,
    pub assignment: Assignment,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "inductiveness counterexample: {} breaks {} from", self.rule, self.conjunct)?;
        let cube = SymCube { lits: self.literals.clone(), lin: vec![] };
        write!(f, " {cube}")?;
        for (v, x) in &self.assignment {
            write!(f, ", {v}={x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Undecided {
    pub obligation: String,
    pub reason: String,
}

impl fmt::Display for Undecided {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.obligation, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Evaluates the invariant conjuncts on the initial configuration.
/// Returns how many were checked.
pub fn check_base(model: &SfcModel, conjuncts: &[Sym], mode: InitActions) -> Result<usize, VerifyResult> {
    let init = init_state(model, mode);
    for c in conjuncts {
        match c.eval(model, &init) {
            Ok(true) => {}
            Ok(false) => return Err(VerifyResult::Refuted(Refutation::Base { conjunct: c.to_string(), state: init })),
            Err(e) => {
                return Err(VerifyResult::Undecided(Undecided { obligation: "base".into(), reason: e.to_string() }))
            }
        }
    }
    Ok(conjuncts.len())
}

/// One rule schema: hypothesis cases, and failure cases per conjunct.
#[derive(Debug, Clone, PartialEq)]
pub struct Obligation {
    pub rule: RuleInstance,
    pub hypothesis: Result<Vec<SymCube>, ObligationError>,
    pub conclusions: Vec<(String, Result<Vec<SymCube>, ObligationError>)>,
}

pub fn inductive_obligations(model: &SfcModel, conjuncts: &[Sym]) -> Vec<Obligation> {
    rule_instances(model)
        .into_iter()
        .map(|rule| Obligation {
            hypothesis: hypothesis_cubes(model, conjuncts, &rule),
            conclusions: conjuncts.iter().map(|c| (c.to_string(), negated_conclusion_cubes(model, c, &rule))).collect(),
            rule,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discharge {
    Proved(RuleCase),
    Refuted(Counterexample),
    Undecided(Undecided),
}

fn undecided(rule: &RuleInstance, reason: impl fmt::Display) -> Discharge {
    Discharge::Undecided(Undecided { obligation: rule.to_string(), reason: reason.to_string() })
}

fn lia_reason(e: LiaError) -> String {
    match e {
        LiaError::Resource(m) => format!("decider gave up: {m}"),
        other => other.to_string(),
    }
}

pub fn discharge(model: &SfcModel, ob: &Obligation, lia: LiaOptions) -> Discharge {
    let rule = &ob.rule;
    let hyps = match &ob.hypothesis {
        Ok(h) => h,
        Err(e) => return undecided(rule, e),
    };
    let mut out = Vec::with_capacity(hyps.len());
    for h in hyps {
        let cube = match arith_cube(model, h) {
            Ok(c) => c,
            Err(e) => return undecided(rule, e),
        };
        match decide_sat_with(&cube, lia) {
            Ok(SatResult::Unsat(p)) => {
                out.push(HypCase::Contradiction(p));
                continue;
            }
            Ok(SatResult::Sat(_)) => {}
            Err(e) => return undecided(rule, lia_reason(e)),
        }
        let mut conj = Vec::with_capacity(ob.conclusions.len());
        for (label, negs) in &ob.conclusions {
            let negs = match negs {
                Ok(n) => n,
                Err(e) => return undecided(rule, format!("{label}: {e}")),
            };
            let mut entries = Vec::with_capacity(negs.len());
            for n in negs {
                if h.clashes(n) {
                    entries.push(Entry::Clash);
                    continue;
                }
                let cube = match combined_cube(model, h, n) {
                    Ok(c) => c,
                    Err(e) => return undecided(rule, e),
                };
                match decide_sat_with(&cube, lia) {
                    Ok(SatResult::Unsat(p)) => entries.push(Entry::Refute(p)),
                    Ok(SatResult::Sat(assignment)) => {
                        let mut literals = h.lits.clone();
                        literals.extend(n.lits.iter().map(|(a, v)| (a.clone(), *v)));
                        return Discharge::Refuted(Counterexample {
                            rule: rule.clone(),
                            conjunct: label.clone(),
                            literals,
                            assignment,
                        });
                    }
                    Err(e) => return undecided(rule, lia_reason(e)),
                }
            }
            conj.push(ConjunctCase { entries });
        }
        out.push(HypCase::Conjuncts(conj));
    }
    Discharge::Proved(RuleCase { rule: rule.clone(), hyps: out })
}

/// Proves `p` invariant over every reachable configuration, or reports why
/// it could not.
pub fn verify_invariant(model: &SfcModel, p: &Formula, opts: VerifyOptions) -> VerifyResult {
    if is_trivial(p) {
        return VerifyResult::Proved(ProofTree::Trivial);
    }
    let conjuncts = match invariant_conjuncts(model, p) {
        Ok(c) => c,
        Err(e) => return VerifyResult::Undecided(Undecided { obligation: "property".into(), reason: e.to_string() }),
    };
    let base = match check_base(model, &conjuncts, opts.init_actions) {
        Ok(n) => n,
        Err(r) => return r,
    };
    let obligations = inductive_obligations(model, &conjuncts);
    let results: Vec<Discharge> = if opts.parallel {
        obligations.par_iter().map(|ob| discharge(model, ob, opts.lia)).collect()
    } else {
        obligations.iter().map(|ob| discharge(model, ob, opts.lia)).collect()
    };
    let mut cases = Vec::with_capacity(results.len());
    let mut pending: Option<Undecided> = None;
    for r in results {
        match r {
            Discharge::Proved(c) => cases.push(c),
            Discharge::Refuted(c) => return VerifyResult::Refuted(Refutation::Inductive(c)),
            Discharge::Undecided(u) => {
                pending.get_or_insert(u);
            }
        }
    }
    match pending {
        Some(u) => VerifyResult::Undecided(u),
        None => VerifyResult::Proved(ProofTree::Induction { base, cases }),
    }
}

/// Every active action is declared, and every active step is declared.
pub fn basic_lemmas(model: &SfcModel) -> Vec<Property> {
    vec![
        Property::new("actions_declared", Formula::ActionsWithin(model.actions.iter().map(|a| a.id.clone()).collect())),
        Property::new("steps_declared", Formula::StepsWithin(model.steps.iter().cloned().collect())),
    ]
}

/// Proves [`basic_lemmas`]. Both are conjoined to every invariant proved
/// by [`verify_invariant`] as well.
pub fn gen_basic_lemmas(model: &SfcModel, opts: VerifyOptions) -> Vec<(Property, VerifyResult)> {
    basic_lemmas(model)
        .into_iter()
        .map(|p| {
            let r = verify_invariant(model, &p.formula, opts);
            (p, r)
        })
        .collect()
}

/// An invariant constructed by one of the library lemmas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedInvariant {
    pub formula: Formula,
    pub result: VerifyResult,
}

fn proved_context(model: &SfcModel, context: &[Formula], opts: VerifyOptions) -> Result<Formula, Undecided> {
    let q = Formula::all(context.iter().cloned());
    match verify_invariant(model, &q, opts) {
        VerifyResult::Proved(_) => Ok(q),
        other => Err(Undecided {
            obligation: "context".into(),
            reason: format!("context invariant is {}: {}", other.verdict(), describe(&other)),
        }),
    }
}

/// One-line explanation of a non-proved result.
pub fn describe(r: &VerifyResult) -> String {
    match r {
        VerifyResult::Proved(t) => format!("{} obligations", t.obligations()),
        VerifyResult::Refuted(x) => x.to_string(),
        VerifyResult::Undecided(u) => u.to_string(),
    }
}

/// A configuration matching a cube: listed atoms as given, others
/// inactive; variables from `assignment`, others at 0.
pub fn concretize(model: &SfcModel, literals: &BTreeMap<BoolAtom, bool>, assignment: &Assignment) -> SfcState {
    let mem: Memory = model
        .vars
        .iter()
        .map(|v| {
            let x = assignment.get(&v.name).copied().unwrap_or(0);
            let value =
                u64::try_from(x).ok().and_then(|x| Value::from_payload(v.ty, x)).unwrap_or(v.ty.default_value());
            (v.name.clone(), value)
        })
        .collect();
    let on = |a: &BoolAtom| literals.get(a) == Some(&true);
    SfcState {
        mem,
        active_steps: model.steps.iter().filter(|s| on(&BoolAtom::Step((*s).clone()))).cloned().collect(),
        active_actions: model
            .actions
            .iter()
            .filter(|a| on(&BoolAtom::Action(a.id.clone())))
            .map(|a| a.id.clone())
            .collect(),
    }
}

/// Step `target` is never active, because under the proved `context` no
/// transition into it can fire.
pub fn check_guard_unreachable(
    model: &SfcModel,
    target: &str,
    context: &[Formula],
    opts: VerifyOptions,
) -> Result<DerivedInvariant, VerifyError> {
    if !model.has_step(target) {
        return Err(VerifyError::Precondition(format!("unknown step `{target}`")));
    }
    if model.initial.iter().any(|s| s == target) {
        return Err(VerifyError::Precondition(format!("step `{target}` is initial")));
    }
    let formula = Formula::and(Formula::all(context.iter().cloned()), Formula::not(Formula::Step(target.into())));
    let undecided = |formula: Formula, u: Undecided| DerivedInvariant { formula, result: VerifyResult::Undecided(u) };
    let q = match proved_context(model, context, opts) {
        Ok(q) => q,
        Err(u) => return Ok(undecided(formula, u)),
    };
    let conjuncts =
        if is_trivial(&q) { invariant_conjuncts(model, &Formula::Const(true)) } else { invariant_conjuncts(model, &q) };
    let conjuncts = match conjuncts {
        Ok(c) => c,
        Err(e) => return Ok(undecided(formula, Undecided { obligation: "context".into(), reason: e.to_string() })),
    };
    for (i, t) in model.transitions.iter().enumerate() {
        if !t.targets.iter().any(|s| s == target) {
            continue;
        }
        let rule = RuleInstance::Trans(i);
        let cubes = match hypothesis_cubes(model, &conjuncts, &rule) {
            Ok(c) => c,
            Err(e) => return Ok(undecided(formula, Undecided { obligation: rule.to_string(), reason: e.to_string() })),
        };
        for h in &cubes {
            let reason = match arith_cube(model, h)
                .map_err(|e| e.to_string())
                .and_then(|c| decide_sat_with(&c, opts.lia).map_err(lia_reason))
            {
                Ok(SatResult::Unsat(_)) => continue,
                Ok(SatResult::Sat(sigma)) => {
                    format!("guard `{}` may hold: {}", t.guard, concretize(model, &h.lits, &sigma))
                }
                Err(e) => e,
            };
            return Ok(undecided(formula, Undecided { obligation: rule.to_string(), reason }));
        }
    }
    let result = verify_invariant(model, &formula, opts);
    Ok(DerivedInvariant { formula, result })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Determined {
    /// Number of refuted cases.
    Proved {
        checked: usize,
    },
    /// A state satisfying the trigger where the listed transitions are
    /// enabled (possibly none).
    Refuted {
        transitions: Vec<usize>,
        state: SfcState,
    },
    Undecided(Undecided),
}

/// Whether `t` can fire as far as its sources and guard are concerned.
pub fn enabled(model: &SfcModel, t: usize) -> Sym {
    let tr = &model.transitions[t];
    let mut parts: Vec<Sym> = tr.sources.iter().map(|s| Sym::Atom(BoolAtom::Step(s.clone()))).collect();
    parts.push(Sym::Arith(tr.guard.clone()));
    Sym::And(parts)
}

/// Whenever `trigger` holds, the only transitions enabled lead to exactly
/// `{step}`, and at least one is enabled.
pub fn check_determined_successor(
    model: &SfcModel,
    trigger: &Formula,
    step: &str,
    context: &[Formula],
    opts: VerifyOptions,
) -> Result<Determined, VerifyError> {
    if !model.has_step(step) {
        return Err(VerifyError::Precondition(format!("unknown step `{step}`")));
    }
    let q = match proved_context(model, context, opts) {
        Ok(q) => q,
        Err(u) => return Ok(Determined::Undecided(u)),
    };
    let lowered = invariant_conjuncts(model, &q).and_then(|mut c| {
        c.push(lower(model, trigger)?);
        Ok(c)
    });
    let base = match lowered {
        Ok(c) => c,
        Err(e) => return Ok(Determined::Undecided(Undecided { obligation: "trigger".into(), reason: e.to_string() })),
    };
    let leads_to_step = |t: usize| {
        let targets = &model.transitions[t].targets;
        !targets.is_empty() && targets.iter().all(|s| s == step)
    };
    let mut cases: Vec<(String, Sym)> = Vec::new();
    for t in (0..model.transitions.len()).filter(|t| !leads_to_step(*t)) {
        let mut parts = base.clone();
        parts.push(enabled(model, t));
        cases.push((format!("trans({t}) enabled"), Sym::And(parts)));
    }
    let mut none = base.clone();
    none.extend(
        (0..model.transitions.len()).filter(|t| leads_to_step(*t)).map(|t| Sym::Not(Box::new(enabled(model, t)))),
    );
    cases.push(("no transition enabled".into(), Sym::And(none)));

    let mut checked = 0;
    for (label, sym) in cases {
        let cubes = match dnf(&sym, true) {
            Ok(c) => c,
            Err(e) => return Ok(Determined::Undecided(Undecided { obligation: label, reason: e.to_string() })),
        };
        for h in &cubes {
            let r = arith_cube(model, h)
                .map_err(|e| e.to_string())
                .and_then(|c| decide_sat_with(&c, opts.lia).map_err(lia_reason));
            match r {
                Ok(SatResult::Unsat(_)) => checked += 1,
                Ok(SatResult::Sat(sigma)) => {
                    let state = concretize(model, &h.lits, &sigma);
                    let transitions = (0..model.transitions.len())
                        .filter(|t| enabled(model, *t).eval(model, &state).unwrap_or(false))
                        .collect();
                    return Ok(Determined::Refuted { transitions, state });
                }
                Err(reason) => return Ok(Determined::Undecided(Undecided { obligation: label, reason })),
            }
        }
    }
    Ok(Determined::Proved { checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lia::replay_witness;
    use crate::syntax::{parse_formula, parse_model};

    const LOOP: &str = "
        var x : int16
        step Init initial
        step Step2
        step Return
        action A_Init on Init { x := x + 1; }
        trans {Init} -[ x < 10 ]-> {Step2}
        trans {Step2} -[ true ]-> {Init}
        trans {Init} -[ x >= 10 ]-> {Return}
    ";

    const LOOP_INV: &str = "x <= 10 && (!action(A_Init) || x <= 9) && (!step(Step2) || x <= 9) \
        && (!action(A_Init) || !step(Step2))";

    fn verify(src: &str, model: &SfcModel) -> VerifyResult {
        verify_invariant(model, &parse_formula(src, model).unwrap(), VerifyOptions::default())
    }

    #[test]
    fn trivial_and_base() {
        let m = parse_model(LOOP).unwrap();
        assert_eq!(verify("true", &m), VerifyResult::Proved(ProofTree::Trivial));
        assert!(matches!(verify("x >= 1", &m), VerifyResult::Refuted(Refutation::Base { .. })));
    }

    #[test]
    fn loop_bound_needs_strengthening() {
        let m = parse_model(LOOP).unwrap();
        // x = 10 with A_Init pending is not reachable but satisfies x <= 10.
        match verify("x <= 10", &m) {
            VerifyResult::Refuted(Refutation::Inductive(c)) => {
                assert_eq!(c.rule, RuleInstance::Exec("A_Init".into()));
                assert_eq!(c.assignment["x"], 10);
                assert!(c.to_string().starts_with("inductiveness counterexample"));
            }
            other => panic!("{other:?}"),
        }
        match verify("x <= 9", &m) {
            VerifyResult::Refuted(Refutation::Inductive(c)) => assert_eq!(c.assignment["x"], 9),
            other => panic!("{other:?}"),
        }
        let VerifyResult::Proved(tree) = verify(LOOP_INV, &m) else { panic!() };
        let ProofTree::Induction { base, cases } = &tree else { panic!() };
        assert_eq!(*base, 6);
        assert_eq!(cases.len(), 7);
        let rules: Vec<RuleInstance> = cases.iter().map(|c| c.rule.clone()).collect();
        assert_eq!(rules, rule_instances(&m));
    }

    #[test]
    fn guard_contradiction_becomes_leaf() {
        let m = parse_model(LOOP).unwrap();
        let f = parse_formula("step(Return) || x <= 9", &m).unwrap();
        let conj = invariant_conjuncts(&m, &f).unwrap();
        let obs = inductive_obligations(&m, &conj);
        assert_eq!(obs.len(), 7);
        // trans(2) needs x >= 10, but its source Init rules out Return only
        // with x <= 9, so one hypothesis case contradicts the guard.
        let Discharge::Proved(case) = discharge(&m, &obs[3], LiaOptions::default()) else { panic!() };
        let contradictions: Vec<_> = case
            .hyps
            .iter()
            .filter_map(|h| match h {
                HypCase::Contradiction(p) => Some(p),
                _ => None,
            })
            .collect();
        assert!(!contradictions.is_empty());
        let hyps = obs[3].hypothesis.as_ref().unwrap();
        for (h, c) in hyps.iter().zip(&case.hyps) {
            if let HypCase::Contradiction(p) = c {
                assert!(replay_witness(&arith_cube(&m, h).unwrap(), p));
            }
        }
    }

    #[test]
    fn basic_lemmas_hold() {
        let m = parse_model(LOOP).unwrap();
        for (p, r) in gen_basic_lemmas(&m, VerifyOptions::default()) {
            assert!(r.is_proved(), "{p}: {r:?}");
        }
    }

    #[test]
    fn results_do_not_depend_on_parallelism() {
        let m = parse_model(LOOP).unwrap();
        let f = parse_formula(LOOP_INV, &m).unwrap();
        let seq = verify_invariant(&m, &f, VerifyOptions { parallel: false, ..Default::default() });
        assert_eq!(seq, verify_invariant(&m, &f, VerifyOptions::default()));
    }

    #[test]
    fn unreachable_return_is_undecided() {
        let m = parse_model(LOOP).unwrap();
        let d = check_guard_unreachable(&m, "Return", &[], VerifyOptions::default()).unwrap();
        assert!(matches!(d.result, VerifyResult::Undecided(ref u) if u.obligation == "trans(2)"));
        assert!(check_guard_unreachable(&m, "Init", &[], VerifyOptions::default()).is_err());
    }

    #[test]
    fn successor_of_init_at_ten() {
        let m = parse_model(LOOP).unwrap();
        let ctx = vec![parse_formula(LOOP_INV, &m).unwrap(), parse_formula("!step(Init) || !step(Step2)", &m).unwrap()];
        let trigger = parse_formula("x >= 10 && step(Init)", &m).unwrap();
        let r = check_determined_successor(&m, &trigger, "Return", &ctx, VerifyOptions::default()).unwrap();
        assert!(matches!(r, Determined::Proved { .. }), "{r:?}");
        let never = parse_formula("false", &m).unwrap();
        let r = check_determined_successor(&m, &never, "Step2", &[], VerifyOptions::default()).unwrap();
        assert!(matches!(r, Determined::Proved { .. }));
    }
}
