//! Decision procedure for conjunctions of linear integer constraints.
//!
//! `decide_sat` either returns a satisfying assignment or a witness that
//! [`replay`] accepts without any search.

mod prover;
mod witness;

use std::collections::BTreeMap;

use thiserror::Error;

pub use prover::enumerate_sat;
pub use witness::{
    combine, is_contradiction, negate_cut, replay, replay_witness, tighten, Derivation, Proof, ProofEnd, ReplayError,
    ReplayStats, MAX_REPLAY_DEPTH, MAX_REPLAY_STEPS,
};

use crate::expr::{
    bounds_for, negate_constraint, with_bounds, Dnf, ExprError, LinearConstraint, VarEnv, MAX_DNF_CUBES,
};

/// Integer values for the variables of a cube.
pub type Assignment = BTreeMap<String, i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiaOptions {
    /// Upper bound on derivations produced by one search.
    pub budget: usize,
}

impl Default for LiaOptions {
    fn default() -> Self {
        LiaOptions { budget: 500_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiaError {
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat(Proof),
}

/// Debug builds compare against enumeration on boxes up to this size.
const CROSS_CHECK_POINTS: u128 = 4096;

pub fn decide_sat(cube: &[LinearConstraint]) -> Result<SatResult, LiaError> {
    decide_sat_with(cube, LiaOptions::default())
}

pub fn decide_sat_with(cube: &[LinearConstraint], opts: LiaOptions) -> Result<SatResult, LiaError> {
    let mut p = prover::Prover::new(cube, opts.budget);
    let result = match p.solve()? {
        prover::Outcome::Sat(sigma) => {
            if let Some(c) = cube.iter().find(|c| c.holds(&sigma) != Some(true)) {
                return Err(LiaError::Internal(format!("model violates {c}")));
            }
            SatResult::Sat(sigma)
        }
        prover::Outcome::Unsat(proof) => {
            if let Err(e) = replay(cube, &proof) {
                return Err(LiaError::Internal(format!("witness does not replay: {e}")));
            }
            SatResult::Unsat(proof)
        }
        prover::Outcome::Open => return Err(LiaError::Internal("open result at top level".into())),
    };
    if cfg!(debug_assertions) {
        if let Some(expected) = enumerate_sat(cube, CROSS_CHECK_POINTS) {
            if expected.is_some() != matches!(result, SatResult::Sat(_)) {
                return Err(LiaError::Internal("disagrees with enumeration".into()));
            }
        }
    }
    Ok(result)
}

/// Negation of a DNF as a DNF. Width bounds of `env` are treated as
/// always true and are not negated.
pub fn negate_dnf(d: &Dnf, env: &VarEnv) -> Result<Dnf, LiaError> {
    let is_bound = |c: &LinearConstraint| {
        c.coeffs.len() == 1 && {
            let v = c.coeffs.keys().next().unwrap();
            env.get(v).is_some_and(|ty| bounds_for(v, *ty).contains(c))
        }
    };
    let mut acc: Dnf = vec![Vec::new()];
    for cube in d {
        let mut options: Vec<LinearConstraint> = Vec::new();
        for c in cube {
            if c.trivial_truth() == Some(true) || is_bound(c) {
                continue;
            }
            options.extend(negate_constraint(c));
        }
        let mut next = Vec::new();
        for partial in &acc {
            for o in &options {
                if o.trivial_truth() == Some(false) {
                    continue;
                }
                let mut p = partial.clone();
                if !p.contains(o) {
                    p.push(o.clone());
                }
                next.push(p);
                if next.len() > MAX_DNF_CUBES {
                    return Err(LiaError::Resource("negation has too many cubes".into()));
                }
            }
        }
        acc = next;
        if acc.is_empty() {
            break;
        }
    }
    Ok(acc)
}

/// The cubes whose joint unsatisfiability means `hyp` implies `concl`: each
/// hypothesis cube with each cube of the negated conclusion, width-bounded.
pub fn implication_cubes(hyp: &Dnf, concl: &Dnf, env: &VarEnv) -> Result<Vec<Vec<LinearConstraint>>, LiaError> {
    let neg = negate_dnf(concl, env)?;
    let mut out = Vec::new();
    for h in hyp {
        for n in &neg {
            let mut cube = h.clone();
            cube.extend(n.iter().cloned());
            out.push(with_bounds(cube, env)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Implication {
    /// One witness per cube of [`implication_cubes`], in order.
    Valid(Vec<Proof>),
    Invalid(Assignment),
}

pub fn decide_valid_implication(hyp: &Dnf, concl: &Dnf, env: &VarEnv) -> Result<Implication, LiaError> {
    let mut proofs = Vec::new();
    for cube in implication_cubes(hyp, concl, env)? {
        match decide_sat(&cube)? {
            SatResult::Sat(sigma) => return Ok(Implication::Invalid(sigma)),
            SatResult::Unsat(p) => proofs.push(p),
        }
    }
    Ok(Implication::Valid(proofs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{normalize, Rel, Ty};
    use crate::syntax::parse_expr;
    use proptest::prelude::*;

    fn env(vars: &[(&str, &str)]) -> VarEnv {
        vars.iter().map(|(v, t)| (v.to_string(), Ty::parse(t).unwrap())).collect()
    }

    fn unsat(cube: &[LinearConstraint]) -> Proof {
        match decide_sat(cube).unwrap() {
            SatResult::Unsat(p) => p,
            SatResult::Sat(s) => panic!("unexpected model {s:?}"),
        }
    }

    #[test]
    fn needs_integer_reasoning() {
        // 2x = 2y + 1 has rational but no integer solutions.
        let cube = vec![LinearConstraint::eq(&[("x", 2), ("y", -2)], -1)];
        assert!(replay_witness(&cube, &unsat(&cube)));
        // 3 <= 2x <= 3 inside a box.
        let cube = vec![
            LinearConstraint::le(&[("x", 2)], -3),
            LinearConstraint::le(&[("x", -2)], 3),
            LinearConstraint::le(&[("x", 1), ("y", 1)], -100),
        ];
        assert!(replay_witness(&cube, &unsat(&cube)));
    }

    #[test]
    fn non_unit_shadow_requires_split() {
        // 3x - 2y = 1 and x + y = 7 in [0, 4]^2: only x = 3, y = 4.
        let sat = vec![
            LinearConstraint::le(&[("x", 3), ("y", -2)], -1),
            LinearConstraint::le(&[("x", -3), ("y", 2)], 1),
            LinearConstraint::eq(&[("x", 1), ("y", 1)], -7),
            LinearConstraint::le(&[("x", -1)], 0),
            LinearConstraint::le(&[("x", 1)], -4),
            LinearConstraint::le(&[("y", -1)], 0),
            LinearConstraint::le(&[("y", 1)], -4),
        ];
        match decide_sat(&sat).unwrap() {
            SatResult::Sat(s) => assert_eq!((s["x"], s["y"]), (3, 4)),
            other => panic!("{other:?}"),
        }
        // 3x - 5y = 1 with x in [0, 1] has rational solutions only.
        let cube = vec![
            LinearConstraint::le(&[("x", 3), ("y", -5)], -1),
            LinearConstraint::le(&[("x", -3), ("y", 5)], 1),
            LinearConstraint::le(&[("x", -1)], 0),
            LinearConstraint::le(&[("x", 1)], -1),
            LinearConstraint::le(&[("y", -1)], 0),
            LinearConstraint::le(&[("y", 1)], -20),
        ];
        let p = unsat(&cube);
        assert!(replay_witness(&cube, &p));
    }

    #[test]
    fn implication_of_loop_step() {
        let e = env(&[("x", "int16")]);
        let hyp = normalize(&parse_expr("x <= 9", &e).unwrap(), &e).unwrap();
        let concl = normalize(&parse_expr("x + 1 <= 10", &e).unwrap(), &e).unwrap();
        let Implication::Valid(proofs) = decide_valid_implication(&hyp, &concl, &e).unwrap() else {
            panic!("expected valid");
        };
        let cubes = implication_cubes(&hyp, &concl, &e).unwrap();
        assert_eq!(cubes.len(), proofs.len());
        for (c, p) in cubes.iter().zip(&proofs) {
            assert!(replay_witness(c, p));
        }
        let weak = normalize(&parse_expr("x <= 10", &e).unwrap(), &e).unwrap();
        match decide_valid_implication(&weak, &concl, &e).unwrap() {
            Implication::Invalid(s) => assert_eq!(s["x"], 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wraparound_is_respected() {
        // For uint8, x + 1 wraps at 255, so x + 1 > x is not valid.
        let e = env(&[("x", "int8")]);
        let t = normalize(&parse_expr("true", &e).unwrap(), &e).unwrap();
        let concl = normalize(&parse_expr("x + 1 > x", &e).unwrap(), &e).unwrap();
        match decide_valid_implication(&t, &concl, &e).unwrap() {
            Implication::Invalid(s) => assert_eq!(s["x"], 255),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negation_skips_bounds() {
        let e = env(&[("x", "int8")]);
        let d = normalize(&parse_expr("x <= 3", &e).unwrap(), &e).unwrap();
        let n = negate_dnf(&d, &e).unwrap();
        assert_eq!(n, vec![vec![LinearConstraint::le(&[("x", -1)], 4)]]);
        assert_eq!(negate_dnf(&vec![], &e).unwrap(), vec![vec![]]);
        assert!(negate_dnf(&vec![vec![]], &e).unwrap().is_empty());
    }

    #[test]
    fn tiny_budget_is_a_resource_error() {
        let cube = vec![LinearConstraint::eq(&[("x", 2), ("y", -2)], -1)];
        let r = decide_sat_with(&cube, LiaOptions { budget: 0 });
        assert!(matches!(r, Err(LiaError::Resource(_))), "{r:?}");
    }

    fn arb_constraint() -> impl Strategy<Value = LinearConstraint> {
        (prop::collection::vec(-4i128..=4, 3), -12i128..=12, prop::bool::weighted(0.2)).prop_map(|(cs, k, eq)| {
            let coeffs = ["a", "b", "c"].iter().map(|v| v.to_string()).zip(cs).collect();
            LinearConstraint::new(coeffs, k, if eq { Rel::Eq } else { Rel::Le })
        })
    }

    fn boxed(mut cube: Vec<LinearConstraint>) -> Vec<LinearConstraint> {
        for v in ["a", "b", "c"] {
            cube.push(LinearConstraint::le(&[(v, -1)], -3));
            cube.push(LinearConstraint::le(&[(v, 1)], -6));
        }
        cube
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn agrees_with_enumeration(cube in prop::collection::vec(arb_constraint(), 1..6)) {
            let cube = boxed(cube);
            let expected = enumerate_sat(&cube, 1 << 20).unwrap();
            match decide_sat(&cube).unwrap() {
                SatResult::Sat(s) => {
                    prop_assert!(expected.is_some());
                    prop_assert!(cube.iter().all(|c| c.holds(&s) == Some(true)));
                }
                SatResult::Unsat(p) => {
                    prop_assert!(expected.is_none());
                    prop_assert!(replay_witness(&cube, &p));
                }
            }
        }

        #[test]
        fn witnesses_do_not_transfer_to_satisfiable_cubes(
            cube in prop::collection::vec(arb_constraint(), 1..6),
            other in prop::collection::vec(arb_constraint(), 1..6),
        ) {
            let cube = boxed(cube);
            let other = boxed(other);
            if let SatResult::Unsat(p) = decide_sat(&cube).unwrap() {
                if enumerate_sat(&other, 1 << 20).unwrap().is_some() {
                    prop_assert!(!replay_witness(&other, &p));
                }
            }
        }
    }
}
