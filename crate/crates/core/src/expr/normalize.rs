//! Normalization of boolean expressions to disjunctions of linear constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{CmpOp, Expr, ExprError, IntTy, Memory, Ty, VarEnv};

/// Upper bound on the number of cubes any single normalization may produce.
pub const MAX_DNF_CUBES: usize = 1 << 14;

/// Upper bound on the number of wrap-around cases of a single comparison.
pub const MAX_WRAP_CASES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Le,
    Eq,
}

/// `sum(coeffs[v] * v) + constant  (<= | =)  0` over the integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<String, i128>,
    pub constant: i128,
    pub rel: Rel,
}

/// Disjunction of conjunctions.
pub type Dnf = Vec<Vec<LinearConstraint>>;

impl LinearConstraint {
    pub fn new(coeffs: BTreeMap<String, i128>, constant: i128, rel: Rel) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, c)| *c != 0).collect();
        LinearConstraint { coeffs, constant, rel }
    }

    pub fn le(coeffs: &[(&str, i128)], constant: i128) -> Self {
        Self::new(coeffs.iter().map(|(v, c)| (v.to_string(), *c)).collect(), constant, Rel::Le)
    }

    pub fn eq(coeffs: &[(&str, i128)], constant: i128) -> Self {
        Self::new(coeffs.iter().map(|(v, c)| (v.to_string(), *c)).collect(), constant, Rel::Eq)
    }

    pub fn coeff(&self, var: &str) -> i128 {
        self.coeffs.get(var).copied().unwrap_or(0)
    }

    /// Truth value of a variable-free constraint.
    pub fn trivial_truth(&self) -> Option<bool> {
        if !self.coeffs.is_empty() {
            return None;
        }
        Some(match self.rel {
            Rel::Le => self.constant <= 0,
            Rel::Eq => self.constant == 0,
        })
    }

    /// Left-hand side under a (total on this constraint) integer assignment.
    pub fn lhs_value(&self, assignment: &BTreeMap<String, i128>) -> Option<i128> {
        let mut acc = self.constant;
        for (v, c) in &self.coeffs {
            let x = *assignment.get(v)?;
            acc = acc.checked_add(c.checked_mul(x)?)?;
        }
        Some(acc)
    }

    pub fn holds(&self, assignment: &BTreeMap<String, i128>) -> Option<bool> {
        let lhs = self.lhs_value(assignment)?;
        Some(match self.rel {
            Rel::Le => lhs <= 0,
            Rel::Eq => lhs == 0,
        })
    }

    /// Evaluates the constraint on a concrete memory (booleans as 0/1).
    pub fn holds_in(&self, mem: &Memory) -> Result<bool, ExprError> {
        let mut assignment = BTreeMap::new();
        for v in self.coeffs.keys() {
            let value = mem.get(v).ok_or_else(|| ExprError::Unbound(v.clone()))?;
            assignment.insert(v.clone(), value.payload() as i128);
        }
        self.holds(&assignment).ok_or_else(|| ExprError::Fragment("arithmetic overflow".into()))
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            let (sign, mag) = if *c < 0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant != 0 {
            let (sign, mag) = if self.constant < 0 { ("-", -self.constant) } else { ("+", self.constant) };
            write!(f, " {sign} {mag}")?;
        }
        match self.rel {
            Rel::Le => f.write_str(" <= 0"),
            Rel::Eq => f.write_str(" = 0"),
        }
    }
}

/// The negation of a constraint as a disjunction.
pub fn negate_constraint(c: &LinearConstraint) -> Vec<LinearConstraint> {
    let flipped = |c: &LinearConstraint, extra: i128| {
        LinearConstraint::new(c.coeffs.iter().map(|(v, k)| (v.clone(), -k)).collect(), -c.constant + extra, Rel::Le)
    };
    match c.rel {
        // not (e <= 0)  <=>  -e + 1 <= 0
        Rel::Le => vec![flipped(c, 1)],
        // not (e = 0)  <=>  e + 1 <= 0  or  -e + 1 <= 0
        Rel::Eq => vec![LinearConstraint::new(c.coeffs.clone(), c.constant + 1, Rel::Le), flipped(c, 1)],
    }
}

/// Width bounds `0 <= v <= max` for one variable.
pub fn bounds_for(var: &str, ty: Ty) -> [LinearConstraint; 2] {
    [LinearConstraint::le(&[(var, -1)], 0), LinearConstraint::le(&[(var, 1)], -(ty.max_payload() as i128))]
}

/// Appends width bounds for every variable occurring in `cube`.
pub fn with_bounds(mut cube: Vec<LinearConstraint>, env: &VarEnv) -> Result<Vec<LinearConstraint>, ExprError> {
    let vars: BTreeSet<String> = cube.iter().flat_map(|c| c.coeffs.keys().cloned()).collect();
    for v in vars {
        let ty = env.get(&v).ok_or_else(|| ExprError::Unbound(v.clone()))?;
        for b in bounds_for(&v, *ty) {
            if !cube.contains(&b) {
                cube.push(b);
            }
        }
    }
    Ok(cube)
}

/// Normalizes `e` and attaches width bounds for occurring variables.
///
/// Strict comparisons become non-strict by shifting the constant, `!=`
/// splits into two disjuncts, and wrap-around of an operand is expressed by
/// an exact case split over the number of times it overflows.
pub fn normalize(e: &Expr, env: &VarEnv) -> Result<Dnf, ExprError> {
    e.check_bool(env)?;
    normalize_unbounded(e)?.into_iter().map(|cube| with_bounds(cube, env)).collect()
}

/// Normalization without attaching width bounds.
pub fn normalize_unbounded(e: &Expr) -> Result<Dnf, ExprError> {
    dnf(e, true)
}

fn dnf(e: &Expr, positive: bool) -> Result<Dnf, ExprError> {
    match e {
        Expr::Bool(b) => Ok(if *b == positive { vec![vec![]] } else { vec![] }),
        Expr::Var(v) => {
            let c = if positive { LinearConstraint::le(&[(v, -1)], 1) } else { LinearConstraint::le(&[(v, 1)], 0) };
            Ok(vec![vec![c]])
        }
        Expr::Not(a) => dnf(a, !positive),
        Expr::And(a, b) if positive => product(dnf(a, true)?, dnf(b, true)?),
        Expr::And(a, b) => union(dnf(a, false)?, dnf(b, false)?),
        Expr::Or(a, b) if positive => union(dnf(a, true)?, dnf(b, true)?),
        Expr::Or(a, b) => product(dnf(a, false)?, dnf(b, false)?),
        Expr::Cmp(op, w, a, b) => {
            let op = if positive { *op } else { op.negate() };
            comparison(op, *w, a, b)
        }
        Expr::Int(_) | Expr::Add(..) | Expr::Sub(..) | Expr::Mul(..) => {
            Err(ExprError::Type(format!("`{e}` is not boolean")))
        }
    }
}

fn union(mut a: Dnf, b: Dnf) -> Result<Dnf, ExprError> {
    for cube in b {
        if !a.contains(&cube) {
            a.push(cube);
        }
    }
    if a.len() > MAX_DNF_CUBES {
        return Err(ExprError::Fragment("disjunctive normal form too large".into()));
    }
    Ok(a)
}

fn product(a: Dnf, b: Dnf) -> Result<Dnf, ExprError> {
    if a.len().saturating_mul(b.len()) > MAX_DNF_CUBES {
        return Err(ExprError::Fragment("disjunctive normal form too large".into()));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in &a {
        for y in &b {
            let mut cube = x.clone();
            for c in y {
                if !cube.contains(c) {
                    cube.push(c.clone());
                }
            }
            if !out.contains(&cube) {
                out.push(cube);
            }
        }
    }
    Ok(out)
}

/// A linear term `sum(coeffs) + constant` over unbounded integers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Term {
    coeffs: BTreeMap<String, i128>,
    constant: i128,
}

impl Term {
    fn scale(mut self, k: i128) -> Term {
        for c in self.coeffs.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    fn plus(mut self, other: Term, sign: i128) -> Term {
        for (v, c) in other.coeffs {
            *self.coeffs.entry(v).or_insert(0) += sign * c;
        }
        self.constant += sign * other.constant;
        self.coeffs.retain(|_, c| *c != 0);
        self
    }

    fn reduce(mut self, modulus: i128) -> Term {
        let sym = |x: i128| {
            let r = x.rem_euclid(modulus);
            if r > modulus / 2 {
                r - modulus
            } else {
                r
            }
        };
        for c in self.coeffs.values_mut() {
            *c = sym(*c);
        }
        self.coeffs.retain(|_, c| *c != 0);
        self.constant = sym(self.constant);
        self
    }

    /// Range of the term when every variable ranges over `0..=max`.
    fn interval(&self, max: i128) -> (i128, i128) {
        let mut lo = self.constant;
        let mut hi = self.constant;
        for c in self.coeffs.values() {
            if *c < 0 {
                lo += c * max;
            } else {
                hi += c * max;
            }
        }
        (lo, hi)
    }
}

/// Linear form of an integer expression at `width`, with coefficients
/// reduced modulo `2^width` (its value mod `2^width` is unchanged).
pub fn linearize(e: &Expr, width: IntTy) -> Result<(BTreeMap<String, i128>, i128), ExprError> {
    let t = term(e, width)?.reduce(width.modulus() as i128);
    Ok((t.coeffs, t.constant))
}

fn term(e: &Expr, width: IntTy) -> Result<Term, ExprError> {
    let modulus = width.modulus() as i128;
    Ok(match e {
        Expr::Int(v) => Term { coeffs: BTreeMap::new(), constant: (*v as i128) % modulus },
        Expr::Var(v) => Term { coeffs: [(v.clone(), 1)].into_iter().collect(), constant: 0 },
        Expr::Add(a, b) => term(a, width)?.plus(term(b, width)?, 1).reduce(modulus),
        Expr::Sub(a, b) => term(a, width)?.plus(term(b, width)?, -1).reduce(modulus),
        Expr::Mul(c, a) => term(a, width)?.scale((*c as i128) % modulus).reduce(modulus),
        _ => return Err(ExprError::Fragment(format!("`{e}` is not a linear integer term"))),
    })
}

/// Cases `(range constraints, shifted term)` covering all values of `t mod 2^w`.
fn wrap_cases(t: Term, width: IntTy) -> Result<Vec<(Vec<LinearConstraint>, Term)>, ExprError> {
    let modulus = width.modulus() as i128;
    let (lo, hi) = t.interval(width.max_value() as i128);
    let k_lo = lo.div_euclid(modulus);
    let k_hi = hi.div_euclid(modulus);
    if (k_hi - k_lo + 1) as usize > MAX_WRAP_CASES {
        return Err(ExprError::Fragment("too many wrap-around cases".into()));
    }
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        let shifted = Term { coeffs: t.coeffs.clone(), constant: t.constant - k * modulus };
        let mut range = Vec::new();
        if k_lo != k_hi {
            // 0 <= t - k*M <= M - 1
            range.push(LinearConstraint::new(
                shifted.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
                -shifted.constant,
                Rel::Le,
            ));
            range.push(LinearConstraint::new(shifted.coeffs.clone(), shifted.constant - (modulus - 1), Rel::Le));
        }
        out.push((range, shifted));
    }
    Ok(out)
}

fn comparison(op: CmpOp, width: IntTy, a: &Expr, b: &Expr) -> Result<Dnf, ExprError> {
    let lhs_cases = wrap_cases(term(a, width)?.reduce(width.modulus() as i128), width)?;
    let rhs_cases = wrap_cases(term(b, width)?.reduce(width.modulus() as i128), width)?;
    if lhs_cases.len() * rhs_cases.len() > MAX_WRAP_CASES {
        return Err(ExprError::Fragment("too many wrap-around cases".into()));
    }
    let mut out: Dnf = Vec::new();
    for (lrange, l) in &lhs_cases {
        for (rrange, r) in &rhs_cases {
            // d = l - r
            let d = l.clone().plus(r.clone(), -1);
            let atoms: Vec<LinearConstraint> = match op {
                CmpOp::Lt => vec![LinearConstraint::new(d.coeffs.clone(), d.constant + 1, Rel::Le)],
                CmpOp::Le => vec![LinearConstraint::new(d.coeffs.clone(), d.constant, Rel::Le)],
                CmpOp::Eq => vec![LinearConstraint::new(d.coeffs.clone(), d.constant, Rel::Eq)],
                CmpOp::Ge => vec![neg_term(&d, 0)],
                CmpOp::Gt => vec![neg_term(&d, 1)],
                CmpOp::Ne => vec![LinearConstraint::new(d.coeffs.clone(), d.constant + 1, Rel::Le), neg_term(&d, 1)],
            };
            for atom in atoms {
                let mut cube: Vec<LinearConstraint> = Vec::new();
                for c in lrange.iter().chain(rrange.iter()).chain(std::iter::once(&atom)) {
                    if !cube.contains(c) {
                        cube.push(c.clone());
                    }
                }
                if let Some(cube) = simplify_cube(cube) {
                    if !out.contains(&cube) {
                        out.push(cube);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `-d + extra <= 0`
fn neg_term(d: &Term, extra: i128) -> LinearConstraint {
    LinearConstraint::new(d.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(), -d.constant + extra, Rel::Le)
}

/// Drops true variable-free constraints; `None` if one is false.
fn simplify_cube(cube: Vec<LinearConstraint>) -> Option<Vec<LinearConstraint>> {
    let mut out = Vec::with_capacity(cube.len());
    for c in cube {
        match c.trivial_truth() {
            Some(true) => {}
            Some(false) => return None,
            None => out.push(c),
        }
    }
    Some(out)
}

/// Evaluates a DNF on a concrete memory.
pub fn eval_dnf(d: &Dnf, mem: &Memory) -> Result<bool, ExprError> {
    for cube in d {
        let mut all = true;
        for c in cube {
            if !c.holds_in(mem)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval_bool, Value};

    fn env16() -> VarEnv {
        [("x".to_string(), Ty::Int(IntTy::U16))].into_iter().collect()
    }

    fn lt10() -> Expr {
        Expr::cmp(CmpOp::Lt, IntTy::U16, Expr::var("x"), Expr::Int(10))
    }

    #[test]
    fn strict_less_than_becomes_le() {
        let d = normalize(&lt10(), &env16()).unwrap();
        assert_eq!(
            d,
            vec![vec![
                LinearConstraint::le(&[("x", 1)], -9),
                LinearConstraint::le(&[("x", -1)], 0),
                LinearConstraint::le(&[("x", 1)], -65535),
            ]]
        );
    }

    #[test]
    fn negated_ge() {
        let e = Expr::not(Expr::cmp(CmpOp::Ge, IntTy::U16, Expr::var("x"), Expr::Int(10)));
        let d = normalize(&e, &env16()).unwrap();
        assert_eq!(d, normalize(&lt10(), &env16()).unwrap());
    }

    #[test]
    fn ne_splits() {
        let e = Expr::cmp(CmpOp::Ne, IntTy::U16, Expr::var("x"), Expr::Int(3));
        let d = normalize_unbounded(&e).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn excluded_middle_covers_box() {
        let e = Expr::or(lt10(), Expr::cmp(CmpOp::Ge, IntTy::U16, Expr::var("x"), Expr::Int(10)));
        let d = normalize(&e, &env16()).unwrap();
        assert_eq!(d.len(), 2);
        // sampled truth table plus endpoints
        for x in (0..=65535u64).step_by(97).chain([0, 9, 10, 11, 65534, 65535]) {
            let m: Memory = [("x".to_string(), Value::Int(IntTy::U16, x))].into_iter().collect();
            assert!(eval_dnf(&d, &m).unwrap());
            let hits = d.iter().filter(|cube| cube.iter().all(|c| c.holds_in(&m).unwrap())).count();
            assert_eq!(hits, 1, "x = {x}");
        }
    }

    #[test]
    fn wrapping_increment_is_exact() {
        // x + 1 <= 10 at width 8: true for x <= 9 and for x = 255.
        let env: VarEnv = [("x".to_string(), Ty::Int(IntTy::U8))].into_iter().collect();
        let e = Expr::cmp(CmpOp::Le, IntTy::U8, Expr::add(Expr::var("x"), Expr::Int(1)), Expr::Int(10));
        let d = normalize(&e, &env).unwrap();
        for x in 0..=255u64 {
            let m: Memory = [("x".to_string(), Value::Int(IntTy::U8, x))].into_iter().collect();
            assert_eq!(eval_dnf(&d, &m).unwrap(), eval_bool(&e, &m).unwrap(), "x = {x}");
        }
    }

    #[test]
    fn negation_of_constraints() {
        let c = LinearConstraint::eq(&[("x", 2)], -4);
        let n = negate_constraint(&c);
        assert_eq!(n.len(), 2);
        let c = LinearConstraint::le(&[("x", 1)], -9);
        assert_eq!(negate_constraint(&c), vec![LinearConstraint::le(&[("x", -1)], 10)]);
    }

    #[test]
    fn bool_vars_normalize_to_01() {
        let env: VarEnv = [("b".to_string(), Ty::Bool)].into_iter().collect();
        let d = normalize(&Expr::not(Expr::var("b")), &env).unwrap();
        assert_eq!(d[0][0], LinearConstraint::le(&[("b", 1)], 0));
    }
}
