use super::{Assignment, Expr, ExprError, IntTy, Memory, Value};

/// Evaluates an expression under `mem`.
pub fn eval(e: &Expr, mem: &Memory) -> Result<Value, ExprError> {
    match e {
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Var(v) => mem.get(v).copied().ok_or_else(|| ExprError::Unbound(v.clone())),
        Expr::Cmp(..) | Expr::And(..) | Expr::Or(..) | Expr::Not(..) => Ok(Value::Bool(eval_bool(e, mem)?)),
        Expr::Int(_) | Expr::Add(..) | Expr::Sub(..) | Expr::Mul(..) => {
            let width = width_in(e, mem)?.unwrap_or(IntTy::U32);
            Ok(Value::Int(width, eval_int(e, width, mem)?))
        }
    }
}

pub fn eval_bool(e: &Expr, mem: &Memory) -> Result<bool, ExprError> {
    match e {
        Expr::Bool(b) => Ok(*b),
        Expr::Var(v) => match mem.get(v) {
            Some(Value::Bool(b)) => Ok(*b),
            Some(Value::Int(..)) => Err(ExprError::Type(format!("`{v}` is not boolean"))),
            None => Err(ExprError::Unbound(v.clone())),
        },
        Expr::Cmp(op, w, a, b) => {
            let lhs = eval_int(a, *w, mem)?;
            let rhs = eval_int(b, *w, mem)?;
            Ok(op.holds(lhs, rhs))
        }
        Expr::And(a, b) => Ok(eval_bool(a, mem)? && eval_bool(b, mem)?),
        Expr::Or(a, b) => Ok(eval_bool(a, mem)? || eval_bool(b, mem)?),
        Expr::Not(a) => Ok(!eval_bool(a, mem)?),
        _ => Err(ExprError::Type(format!("`{e}` is not boolean"))),
    }
}

/// Evaluates an integer expression at `width`, wrapping after every operation.
pub fn eval_int(e: &Expr, width: IntTy, mem: &Memory) -> Result<u64, ExprError> {
    let mask = width.max_value();
    match e {
        Expr::Int(v) => Ok(v & mask),
        Expr::Var(v) => match mem.get(v) {
            Some(Value::Int(_, x)) => Ok(x & mask),
            Some(Value::Bool(_)) => Err(ExprError::Type(format!("`{v}` is not an integer"))),
            None => Err(ExprError::Unbound(v.clone())),
        },
        Expr::Add(a, b) => Ok(eval_int(a, width, mem)?.wrapping_add(eval_int(b, width, mem)?) & mask),
        Expr::Sub(a, b) => Ok(eval_int(a, width, mem)?.wrapping_sub(eval_int(b, width, mem)?) & mask),
        Expr::Mul(c, a) => {
            let prod = (*c as u128 & mask as u128) * eval_int(a, width, mem)? as u128;
            Ok((prod & mask as u128) as u64)
        }
        _ => Err(ExprError::Type(format!("`{e}` is not an integer expression"))),
    }
}

fn width_in(e: &Expr, mem: &Memory) -> Result<Option<IntTy>, ExprError> {
    match e {
        Expr::Var(v) => match mem.get(v) {
            Some(Value::Int(w, _)) => Ok(Some(*w)),
            Some(Value::Bool(_)) => Err(ExprError::Type(format!("`{v}` is not an integer"))),
            None => Err(ExprError::Unbound(v.clone())),
        },
        Expr::Add(a, b) | Expr::Sub(a, b) => Ok(width_in(a, mem)?.or(width_in(b, mem)?)),
        Expr::Mul(_, a) => width_in(a, mem),
        _ => Ok(None),
    }
}

/// Runs an assignment list in order; later statements observe earlier ones.
pub fn apply_assignments(body: &[Assignment], mem: &Memory) -> Result<Memory, ExprError> {
    let mut out = mem.clone();
    for stmt in body {
        let ty = out.get(&stmt.target).map(|v| v.ty()).ok_or_else(|| ExprError::Unbound(stmt.target.clone()))?;
        let value = match ty {
            super::Ty::Bool => Value::Bool(eval_bool(&stmt.value, &out)?),
            super::Ty::Int(w) => Value::Int(w, eval_int(&stmt.value, w, &out)?),
        };
        out.insert(stmt.target.clone(), value);
    }
    Ok(out)
}
