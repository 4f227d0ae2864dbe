//! Unsatisfiability witnesses and their replay.
//!
//! A witness is a list of derivations, each a linear combination of earlier
//! constraints followed by integer tightening, ending either in a
//! variable-free false constraint or in an explicit case split `e <= 0` /
//! `e >= 1` whose branches are witnesses themselves. Replay performs no
//! search.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{LinearConstraint, Rel};

/// Replay gives up beyond this many nested splits.
pub const MAX_REPLAY_DEPTH: usize = 512;
/// Replay gives up beyond this many steps in total.
pub const MAX_REPLAY_STEPS: usize = 2_000_000;

/// `sum(mult * pool[idx])`, tightened. `Le` results may combine equalities
/// with any sign and inequalities with non-negative multipliers; `Eq`
/// results may only combine equalities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub rel: Rel,
    pub terms: Vec<(usize, i128)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Proof {
    pub steps: Vec<Derivation>,
    pub end: ProofEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProofEnd {
    /// The indexed pool entry is variable-free and false.
    Conclude(usize),
    /// Case split on `cut` (an inequality): `le` assumes it, `gt` assumes
    /// its integer negation.
    Split { cut: LinearConstraint, le: Box<Proof>, gt: Box<Proof> },
}

impl Proof {
    pub fn conclude(idx: usize) -> Self {
        Proof { steps: Vec::new(), end: ProofEnd::Conclude(idx) }
    }

    /// Number of derivations, splits and conclusions.
    pub fn size(&self) -> usize {
        self.steps.len()
            + match &self.end {
                ProofEnd::Conclude(_) => 1,
                ProofEnd::Split { le, gt, .. } => 1 + le.size() + gt.size(),
            }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("reference to constraint {0} which does not exist")]
    BadIndex(usize),
    #[error("derivation has no terms")]
    Empty,
    #[error("negative multiplier on inequality {0}")]
    NegativeMultiplier(usize),
    #[error("equality derived from inequality {0}")]
    NotEquality(usize),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("constraint {0} is not a variable-free contradiction")]
    NotContradiction(usize),
    #[error("case split on an equality")]
    EqualityCut,
    #[error("witness nesting too deep")]
    TooDeep,
    #[error("witness too long")]
    TooLong,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i128
}

/// Divides by the gcd of the coefficients, rounding the constant up for
/// inequalities. An equality whose constant is not divisible becomes `1 <= 0`.
pub fn tighten(c: &LinearConstraint) -> LinearConstraint {
    let g = c.coeffs.values().fold(0, |g, v| gcd(g, *v));
    if g <= 1 {
        return c.clone();
    }
    let coeffs: BTreeMap<String, i128> = c.coeffs.iter().map(|(k, v)| (k.clone(), v / g)).collect();
    match c.rel {
        Rel::Le => {
            let k = c.constant.div_euclid(g) + i128::from(c.constant.rem_euclid(g) != 0);
            LinearConstraint::new(coeffs, k, Rel::Le)
        }
        Rel::Eq if c.constant % g != 0 => LinearConstraint::new(BTreeMap::new(), 1, Rel::Le),
        Rel::Eq => LinearConstraint::new(coeffs, c.constant / g, Rel::Eq),
    }
}

/// Evaluates one derivation against `pool`.
pub fn combine(pool: &[LinearConstraint], d: &Derivation) -> Result<LinearConstraint, ReplayError> {
    if d.terms.is_empty() {
        return Err(ReplayError::Empty);
    }
    let mut coeffs: BTreeMap<String, i128> = BTreeMap::new();
    let mut constant: i128 = 0;
    for &(idx, mult) in &d.terms {
        let c = pool.get(idx).ok_or(ReplayError::BadIndex(idx))?;
        match (d.rel, c.rel) {
            (Rel::Eq, Rel::Le) => return Err(ReplayError::NotEquality(idx)),
            (Rel::Le, Rel::Le) if mult < 0 => return Err(ReplayError::NegativeMultiplier(idx)),
            _ => {}
        }
        for (v, a) in &c.coeffs {
            let term = a.checked_mul(mult).ok_or(ReplayError::Overflow)?;
            let slot = coeffs.entry(v.clone()).or_insert(0);
            *slot = slot.checked_add(term).ok_or(ReplayError::Overflow)?;
        }
        let term = c.constant.checked_mul(mult).ok_or(ReplayError::Overflow)?;
        constant = constant.checked_add(term).ok_or(ReplayError::Overflow)?;
    }
    Ok(tighten(&LinearConstraint::new(coeffs, constant, d.rel)))
}

/// True for a variable-free constraint that cannot hold.
pub fn is_contradiction(c: &LinearConstraint) -> bool {
    c.coeffs.is_empty()
        && match c.rel {
            Rel::Le => c.constant > 0,
            Rel::Eq => c.constant != 0,
        }
}

/// Integer negation of an inequality `e <= 0`, i.e. `-e + 1 <= 0`.
pub fn negate_cut(cut: &LinearConstraint) -> Result<LinearConstraint, ReplayError> {
    if cut.rel != Rel::Le {
        return Err(ReplayError::EqualityCut);
    }
    let mut coeffs = BTreeMap::new();
    for (v, a) in &cut.coeffs {
        coeffs.insert(v.clone(), a.checked_neg().ok_or(ReplayError::Overflow)?);
    }
    let k = cut.constant.checked_neg().and_then(|k| k.checked_add(1)).ok_or(ReplayError::Overflow)?;
    Ok(LinearConstraint::new(coeffs, k, Rel::Le))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayStats {
    pub steps: usize,
    pub max_depth: usize,
}

/// Replays `proof` against `cube`. `Ok` means the cube is unsatisfiable.
pub fn replay(cube: &[LinearConstraint], proof: &Proof) -> Result<ReplayStats, ReplayError> {
    let mut pool = cube.to_vec();
    let mut stats = ReplayStats::default();
    replay_in(&mut pool, proof, 0, &mut stats)?;
    Ok(stats)
}

fn replay_in(
    pool: &mut Vec<LinearConstraint>,
    proof: &Proof,
    depth: usize,
    stats: &mut ReplayStats,
) -> Result<(), ReplayError> {
    if depth > MAX_REPLAY_DEPTH {
        return Err(ReplayError::TooDeep);
    }
    stats.max_depth = stats.max_depth.max(depth);
    let mark = pool.len();
    for d in &proof.steps {
        stats.steps += 1;
        if stats.steps > MAX_REPLAY_STEPS {
            return Err(ReplayError::TooLong);
        }
        let c = combine(pool, d)?;
        pool.push(c);
    }
    stats.steps += 1;
    let result = match &proof.end {
        ProofEnd::Conclude(idx) => {
            let c = pool.get(*idx).ok_or(ReplayError::BadIndex(*idx))?;
            if is_contradiction(c) {
                Ok(())
            } else {
                Err(ReplayError::NotContradiction(*idx))
            }
        }
        ProofEnd::Split { cut, le, gt } => {
            let neg = negate_cut(cut)?;
            let at = pool.len();
            pool.push(cut.clone());
            replay_in(pool, le, depth + 1, stats)?;
            pool.truncate(at);
            pool.push(neg);
            replay_in(pool, gt, depth + 1, stats)?;
            pool.truncate(at);
            Ok(())
        }
    };
    pool.truncate(mark);
    result
}

/// Boolean view of [`replay`]; never panics.
pub fn replay_witness(cube: &[LinearConstraint], proof: &Proof) -> bool {
    replay(cube, proof).is_ok()
}
