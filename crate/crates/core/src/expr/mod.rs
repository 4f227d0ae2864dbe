//! Typed expression language shared by guards, action bodies and invariants.
//!
//! Integers are unsigned and fixed-width; every arithmetic operation wraps
//! modulo `2^width`. Multiplication is only allowed by constants so that all
//! atoms stay inside linear integer arithmetic.

mod eval;
mod normalize;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use eval::{apply_assignments, eval, eval_bool, eval_int};
pub use normalize::{
    bounds_for, eval_dnf, linearize, negate_constraint, normalize, normalize_unbounded, with_bounds, Dnf,
    LinearConstraint, Rel, MAX_DNF_CUBES, MAX_WRAP_CASES,
};

/// Unsigned integer widths supported by the datatype library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IntTy {
    U8,
    U16,
    U32,
}

impl IntTy {
    pub fn bits(self) -> u32 {
        match self {
            IntTy::U8 => 8,
            IntTy::U16 => 16,
            IntTy::U32 => 32,
        }
    }

    /// `2^bits`, the modulus of wrapping arithmetic.
    pub fn modulus(self) -> u64 {
        1u64 << self.bits()
    }

    pub fn max_value(self) -> u64 {
        self.modulus() - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            IntTy::U8 => "int8",
            IntTy::U16 => "int16",
            IntTy::U32 => "int32",
        }
    }
}

/// Declared type of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ty {
    Int(IntTy),
    Bool,
}

impl Ty {
    pub fn parse(name: &str) -> Option<Ty> {
        match name {
            "int8" => Some(Ty::Int(IntTy::U8)),
            "int16" => Some(Ty::Int(IntTy::U16)),
            "int32" => Some(Ty::Int(IntTy::U32)),
            "bool" => Some(Ty::Bool),
            _ => None,
        }
    }

    pub fn default_value(self) -> Value {
        match self {
            Ty::Int(w) => Value::Int(w, 0),
            Ty::Bool => Value::Bool(false),
        }
    }

    /// Largest payload a value of this type can carry.
    pub fn max_payload(self) -> u64 {
        match self {
            Ty::Int(w) => w.max_value(),
            Ty::Bool => 1,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int(w) => f.write_str(w.name()),
            Ty::Bool => f.write_str("bool"),
        }
    }
}

/// A runtime value. Integer payloads always lie in `0..2^width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(IntTy, u64),
    Bool(bool),
}

impl Value {
    /// Builds an integer value, reducing the payload into range.
    pub fn int(width: IntTy, payload: u64) -> Value {
        Value::Int(width, payload & width.max_value())
    }

    pub fn ty(self) -> Ty {
        match self {
            Value::Int(w, _) => Ty::Int(w),
            Value::Bool(_) => Ty::Bool,
        }
    }

    /// The natural-number payload (booleans map to 0/1).
    pub fn payload(self) -> u64 {
        match self {
            Value::Int(_, v) => v,
            Value::Bool(b) => b as u64,
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Int(..) => None,
        }
    }

    /// Builds a value of type `ty` from a payload, if it is in range.
    pub fn from_payload(ty: Ty, payload: u64) -> Option<Value> {
        match ty {
            Ty::Int(w) if payload <= w.max_value() => Some(Value::Int(w, payload)),
            Ty::Bool if payload <= 1 => Some(Value::Bool(payload == 1)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(_, v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Total map from declared variables to values.
pub type Memory = BTreeMap<String, Value>;

/// Variable typing environment.
pub type VarEnv = BTreeMap<String, Ty>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }

    pub fn holds(self, lhs: u64, rhs: u64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// Expression tree. Comparisons carry the width they are evaluated at.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(u64),
    Bool(bool),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    /// Multiplication by a constant factor.
    Mul(u64, Box<Expr>),
    Cmp(CmpOp, IntTy, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("type mismatch: {0}")]
    Type(String),
    #[error("not in supported fragment: {0}")]
    Fragment(String),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn cmp(op: CmpOp, width: IntTy, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Cmp(op, width, Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Add(Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(lhs), Box::new(rhs))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Expr {
        Expr::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Expr {
        Expr::Or(Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Expr) -> Expr {
        Expr::Not(Box::new(inner))
    }

    /// Collects referenced variables into `out`.
    pub fn vars_into(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Expr::Cmp(_, _, a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Expr::Mul(_, e) | Expr::Not(e) => e.vars_into(out),
        }
    }

    pub fn vars(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    /// Simultaneous substitution of variables by expressions.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Int(_) | Expr::Bool(_) => self.clone(),
            Expr::Add(a, b) => Expr::add(a.substitute(map), b.substitute(map)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(map), b.substitute(map)),
            Expr::Mul(c, e) => Expr::Mul(*c, Box::new(e.substitute(map))),
            Expr::Cmp(op, w, a, b) => Expr::cmp(*op, *w, a.substitute(map), b.substitute(map)),
            Expr::And(a, b) => Expr::and(a.substitute(map), b.substitute(map)),
            Expr::Or(a, b) => Expr::or(a.substitute(map), b.substitute(map)),
            Expr::Not(e) => Expr::not(e.substitute(map)),
        }
    }

    /// Infers the type of the expression, checking it along the way.
    ///
    /// Integer literals adapt to the width of the surrounding variables;
    /// purely literal integer expressions are reported as `None` width.
    pub fn check(&self, env: &VarEnv) -> Result<ExprTy, ExprError> {
        match self {
            Expr::Int(_) => Ok(ExprTy::Int(None)),
            Expr::Bool(_) => Ok(ExprTy::Bool),
            Expr::Var(v) => match env.get(v) {
                Some(Ty::Int(w)) => Ok(ExprTy::Int(Some(*w))),
                Some(Ty::Bool) => Ok(ExprTy::Bool),
                None => Err(ExprError::Unbound(v.clone())),
            },
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let wa = a.check_int(env)?;
                let wb = b.check_int(env)?;
                let w = unify_width(wa, wb)?;
                if let Some(w) = w {
                    a.check_literals(w)?;
                    b.check_literals(w)?;
                }
                Ok(ExprTy::Int(w))
            }
            Expr::Mul(_, e) => Ok(ExprTy::Int(e.check_int(env)?)),
            Expr::Cmp(_, w, a, b) => {
                let wa = a.check_int(env)?;
                let wb = b.check_int(env)?;
                let inferred = unify_width(wa, wb)?.unwrap_or(IntTy::U32);
                if inferred != *w {
                    return Err(ExprError::Type(format!(
                        "comparison tagged {} but operands are {}",
                        w.name(),
                        inferred.name()
                    )));
                }
                a.check_literals(*w)?;
                b.check_literals(*w)?;
                Ok(ExprTy::Bool)
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.check_bool(env)?;
                b.check_bool(env)?;
                Ok(ExprTy::Bool)
            }
            Expr::Not(e) => {
                e.check_bool(env)?;
                Ok(ExprTy::Bool)
            }
        }
    }

    pub fn check_bool(&self, env: &VarEnv) -> Result<(), ExprError> {
        match self.check(env)? {
            ExprTy::Bool => Ok(()),
            ExprTy::Int(_) => Err(ExprError::Type(format!("expected bool, found integer in `{self}`"))),
        }
    }

    pub fn check_int(&self, env: &VarEnv) -> Result<Option<IntTy>, ExprError> {
        match self.check(env)? {
            ExprTy::Int(w) => Ok(w),
            ExprTy::Bool => Err(ExprError::Type(format!("expected integer, found bool in `{self}`"))),
        }
    }

    /// Checks that the expression can be stored into a variable of type `ty`.
    pub fn check_assignable(&self, ty: Ty, env: &VarEnv) -> Result<(), ExprError> {
        match ty {
            Ty::Bool => self.check_bool(env),
            Ty::Int(w) => {
                let inferred = self.check_int(env)?;
                if let Some(iw) = inferred {
                    if iw != w {
                        return Err(ExprError::Type(format!(
                            "cannot assign {} expression to {} variable",
                            iw.name(),
                            w.name()
                        )));
                    }
                }
                self.check_literals(w)
            }
        }
    }

    fn check_literals(&self, width: IntTy) -> Result<(), ExprError> {
        match self {
            Expr::Int(v) if *v > width.max_value() => {
                Err(ExprError::Type(format!("literal {v} out of range for {}", width.name())))
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.check_literals(width)?;
                b.check_literals(width)
            }
            Expr::Mul(c, e) if *c > width.max_value() => {
                let _ = e;
                Err(ExprError::Type(format!("factor {c} out of range for {}", width.name())))
            }
            Expr::Mul(_, e) => e.check_literals(width),
            _ => Ok(()),
        }
    }

    /// Re-infers comparison widths from operand declarations.
    pub fn elaborate(self, env: &VarEnv) -> Result<Expr, ExprError> {
        Ok(match self {
            Expr::Cmp(op, _, a, b) => {
                let a = a.elaborate(env)?;
                let b = b.elaborate(env)?;
                let w = unify_width(a.check_int(env)?, b.check_int(env)?)?.unwrap_or(IntTy::U32);
                Expr::cmp(op, w, a, b)
            }
            Expr::Add(a, b) => Expr::add(a.elaborate(env)?, b.elaborate(env)?),
            Expr::Sub(a, b) => Expr::sub(a.elaborate(env)?, b.elaborate(env)?),
            Expr::Mul(c, e) => Expr::Mul(c, Box::new(e.elaborate(env)?)),
            Expr::And(a, b) => Expr::and(a.elaborate(env)?, b.elaborate(env)?),
            Expr::Or(a, b) => Expr::or(a.elaborate(env)?, b.elaborate(env)?),
            Expr::Not(e) => Expr::not(e.elaborate(env)?),
            other => other,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(..) => 3,
            Expr::Cmp(..) => 4,
            Expr::Add(..) | Expr::Sub(..) => 5,
            Expr::Mul(..) => 6,
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => 7,
        }
    }
}

/// Result of type inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExprTy {
    Bool,
    /// Integer of the given width; `None` for literal-only expressions.
    Int(Option<IntTy>),
}

fn unify_width(a: Option<IntTy>, b: Option<IntTy>) -> Result<Option<IntTy>, ExprError> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => {
            Err(ExprError::Type(format!("mixed integer widths {} and {}", x.name(), y.name())))
        }
        (Some(x), _) | (_, Some(x)) => Ok(Some(x)),
        (None, None) => Ok(None),
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Add(a, b) => {
                write_child(f, a, 5)?;
                f.write_str(" + ")?;
                write_child(f, b, 6)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 5)?;
                f.write_str(" - ")?;
                write_child(f, b, 6)
            }
            Expr::Mul(c, e) => {
                write!(f, "{c} * ")?;
                write_child(f, e, 7)
            }
            Expr::Cmp(op, _, a, b) => {
                write_child(f, a, 5)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, b, 5)
            }
            Expr::And(a, b) => {
                write_child(f, a, 2)?;
                f.write_str(" && ")?;
                write_child(f, b, 3)
            }
            Expr::Or(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(" || ")?;
                write_child(f, b, 2)
            }
            Expr::Not(e) => {
                f.write_str("!")?;
                write_child(f, e, 4)
            }
        }
    }
}

/// One `target := value` statement of an action body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub target: String,
    pub value: Expr,
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {}", self.target, self.value)
    }
}

/// Weakest-precondition substitution of `post` through a sequential
/// assignment list: the result holds before the list runs iff `post` holds
/// afterwards.
pub fn wp_assignments(assignments: &[Assignment], post: &Expr) -> Expr {
    assignments.iter().rev().fold(post.clone(), |acc, a| {
        let mut map = BTreeMap::new();
        map.insert(a.target.clone(), a.value.clone());
        acc.substitute(&map)
    })
}
