//! Proof search. Produces assignments or replayable witnesses.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::witness::{combine, is_contradiction, negate_cut, tighten, Derivation, Proof, ProofEnd, ReplayError};
use super::{Assignment, LiaError};
use crate::expr::{LinearConstraint, Rel};

const MAX_DEPTH: usize = 400;
const MAX_PAIRS: usize = 20_000;

pub(crate) enum Outcome {
    Sat(Assignment),
    Unsat(Proof),
    /// Relaxed search found no refutation.
    Open,
}

pub(crate) struct Prover {
    pool: Vec<LinearConstraint>,
    work: usize,
    budget: usize,
}

fn overflow(e: ReplayError) -> LiaError {
    match e {
        ReplayError::Overflow => LiaError::Resource("coefficient overflow".into()),
        other => LiaError::Internal(other.to_string()),
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

/// Value of everything except `x` in `c` under `sigma`; absent vars are 0.
fn rest_value(c: &LinearConstraint, x: &str, sigma: &Assignment) -> Option<i128> {
    let mut acc = c.constant;
    for (v, a) in &c.coeffs {
        if v != x {
            acc = acc.checked_add(a.checked_mul(*sigma.get(v).unwrap_or(&0))?)?;
        }
    }
    Some(acc)
}

impl Prover {
    pub(crate) fn new(cube: &[LinearConstraint], budget: usize) -> Self {
        Prover { pool: cube.to_vec(), work: 0, budget }
    }

    fn tick(&mut self) -> Result<(), LiaError> {
        self.work += 1;
        if self.work > self.budget {
            Err(LiaError::Resource(format!("search budget of {} steps exhausted", self.budget)))
        } else {
            Ok(())
        }
    }

    fn derive(&mut self, rel: Rel, terms: Vec<(usize, i128)>, derivs: &mut Vec<Derivation>) -> Result<usize, LiaError> {
        self.tick()?;
        let d = Derivation { rel, terms };
        let c = combine(&self.pool, &d).map_err(overflow)?;
        self.pool.push(c);
        derivs.push(d);
        Ok(self.pool.len() - 1)
    }

    pub(crate) fn solve(&mut self) -> Result<Outcome, LiaError> {
        let active: Vec<usize> = (0..self.pool.len()).collect();
        let out = self.refute(active, 0, false)?;
        if let Outcome::Sat(mut sigma) = out {
            for c in &self.pool {
                for v in c.coeffs.keys() {
                    sigma.entry(v.clone()).or_insert(0);
                }
            }
            return Ok(Outcome::Sat(sigma));
        }
        Ok(out)
    }

    fn refute(&mut self, active: Vec<usize>, depth: usize, relaxed: bool) -> Result<Outcome, LiaError> {
        if depth > MAX_DEPTH {
            return Err(LiaError::Resource("search too deep".into()));
        }
        let mark = self.pool.len();
        let mut derivs = Vec::new();
        match self.frame(active, &mut derivs, depth, relaxed)? {
            Outcome::Unsat(tail) => {
                derivs.extend(tail.steps);
                self.pool.truncate(mark);
                Ok(Outcome::Unsat(Proof { steps: derivs, end: tail.end }))
            }
            other => {
                self.pool.truncate(mark);
                Ok(other)
            }
        }
    }

    /// Tightens, drops trivial and dominated constraints, and looks for
    /// directly contradictory pairs.
    fn cleanup(
        &mut self,
        active: Vec<usize>,
        derivs: &mut Vec<Derivation>,
    ) -> Result<Result<Vec<usize>, Proof>, LiaError> {
        let mut le: BTreeMap<BTreeMap<String, i128>, usize> = BTreeMap::new();
        let mut eq: BTreeMap<BTreeMap<String, i128>, usize> = BTreeMap::new();
        for mut i in active {
            if tighten(&self.pool[i]) != self.pool[i] {
                let rel = self.pool[i].rel;
                i = self.derive(rel, vec![(i, 1)], derivs)?;
            }
            let c = &self.pool[i];
            if c.coeffs.is_empty() {
                if is_contradiction(c) {
                    return Ok(Err(Proof::conclude(i)));
                }
                continue;
            }
            match c.rel {
                Rel::Le => match le.get(&c.coeffs) {
                    Some(&j) if self.pool[j].constant >= c.constant => {}
                    _ => {
                        le.insert(c.coeffs.clone(), i);
                    }
                },
                Rel::Eq => match eq.get(&c.coeffs) {
                    Some(&j) if self.pool[j].constant == c.constant => {}
                    Some(&j) => {
                        let k = self.derive(Rel::Eq, vec![(i, 1), (j, -1)], derivs)?;
                        return Ok(Err(Proof::conclude(k)));
                    }
                    None => {
                        eq.insert(c.coeffs.clone(), i);
                    }
                },
            }
        }
        let neg =
            |m: &BTreeMap<String, i128>| -> BTreeMap<String, i128> { m.iter().map(|(k, v)| (k.clone(), -v)).collect() };
        let les: Vec<usize> = le.values().copied().collect();
        for &i in &les {
            let key = neg(&self.pool[i].coeffs);
            if let Some(&j) = le.get(&key) {
                if self.pool[i].constant.saturating_add(self.pool[j].constant) > 0 {
                    let k = self.derive(Rel::Le, vec![(i, 1), (j, 1)], derivs)?;
                    return Ok(Err(Proof::conclude(k)));
                }
            }
            for (key, sign) in [(self.pool[i].coeffs.clone(), -1), (key, 1)] {
                if let Some(&e) = eq.get(&key) {
                    let k = self.derive(Rel::Le, vec![(i, 1), (e, sign)], derivs)?;
                    if is_contradiction(&self.pool[k]) {
                        return Ok(Err(Proof::conclude(k)));
                    }
                    self.pool.pop();
                    derivs.pop();
                }
            }
        }
        let mut out: Vec<usize> = le.into_values().chain(eq.into_values()).collect();
        out.sort_unstable();
        Ok(Ok(out))
    }

    fn frame(
        &mut self,
        active: Vec<usize>,
        derivs: &mut Vec<Derivation>,
        depth: usize,
        relaxed: bool,
    ) -> Result<Outcome, LiaError> {
        let mut active = active;
        loop {
            active = match self.cleanup(active, derivs)? {
                Ok(a) => a,
                Err(proof) => return Ok(Outcome::Unsat(proof)),
            };
            if active.is_empty() {
                return Ok(if relaxed { Outcome::Open } else { Outcome::Sat(Assignment::new()) });
            }

            // Equalities with a unit coefficient: substitute.
            let unit_eq = active.iter().find_map(|&i| {
                let c = &self.pool[i];
                if c.rel != Rel::Eq {
                    return None;
                }
                c.coeffs.iter().find(|(_, a)| a.abs() == 1).map(|(v, a)| (i, v.clone(), *a))
            });
            if let Some((e, x, u)) = unit_eq {
                let mut next = Vec::new();
                for &i in &active {
                    if i == e {
                        continue;
                    }
                    let a = self.pool[i].coeff(&x);
                    if a == 0 {
                        next.push(i);
                    } else {
                        let rel = self.pool[i].rel;
                        let m = a
                            .checked_mul(u)
                            .and_then(i128::checked_neg)
                            .ok_or_else(|| overflow(ReplayError::Overflow))?;
                        next.push(self.derive(rel, vec![(i, 1), (e, m)], derivs)?);
                    }
                }
                return match self.refute(next, depth + 1, relaxed)? {
                    Outcome::Sat(mut sigma) => {
                        let c = &self.pool[e];
                        for v in c.coeffs.keys() {
                            if v != &x {
                                sigma.entry(v.clone()).or_insert(0);
                            }
                        }
                        let r = rest_value(c, &x, &sigma).ok_or_else(|| overflow(ReplayError::Overflow))?;
                        sigma.insert(x, -u * r);
                        Ok(Outcome::Sat(sigma))
                    }
                    other => Ok(other),
                };
            }

            // Remaining equalities become two inequalities.
            if let Some(pos) = active.iter().position(|&i| self.pool[i].rel == Rel::Eq) {
                let e = active.remove(pos);
                active.push(self.derive(Rel::Le, vec![(e, 1)], derivs)?);
                active.push(self.derive(Rel::Le, vec![(e, -1)], derivs)?);
                continue;
            }

            return self.eliminate(active, derivs, depth, relaxed);
        }
    }

    fn eliminate(
        &mut self,
        active: Vec<usize>,
        derivs: &mut Vec<Derivation>,
        depth: usize,
        relaxed: bool,
    ) -> Result<Outcome, LiaError> {
        let vars: BTreeSet<String> = active.iter().flat_map(|&i| self.pool[i].coeffs.keys().cloned()).collect();
        struct Cand {
            x: String,
            lowers: Vec<usize>,
            uppers: Vec<usize>,
            exact: bool,
            cost: i64,
        }
        let mut best: Option<Cand> = None;
        for x in &vars {
            let lowers: Vec<usize> = active.iter().copied().filter(|&i| self.pool[i].coeff(x) < 0).collect();
            let uppers: Vec<usize> = active.iter().copied().filter(|&i| self.pool[i].coeff(x) > 0).collect();
            let one_sided = lowers.is_empty() || uppers.is_empty();
            let exact = one_sided
                || lowers.iter().all(|&i| self.pool[i].coeff(x) == -1)
                || uppers.iter().all(|&i| self.pool[i].coeff(x) == 1);
            let (l, u) = (lowers.len() as i64, uppers.len() as i64);
            let cost = if one_sided { i64::MIN } else { l * u - l - u };
            let better = match &best {
                None => true,
                Some(b) => (!exact, cost) < (!b.exact, b.cost),
            };
            if better {
                best = Some(Cand { x: x.clone(), lowers, uppers, exact, cost });
            }
        }
        let Cand { x, lowers, uppers, exact, .. } = best.expect("active constraints mention a variable");
        let others: Vec<usize> = active.iter().copied().filter(|&i| self.pool[i].coeff(&x) == 0).collect();
        let x_cons: Vec<usize> = lowers.iter().chain(&uppers).copied().collect();

        if lowers.is_empty() || uppers.is_empty() {
            return match self.refute(others, depth + 1, relaxed)? {
                Outcome::Sat(sigma) => self.extend(sigma, &x, &x_cons),
                other => Ok(other),
            };
        }

        let (lo, hi) = self.unary_bounds(&x, &active);
        if !exact {
            if let (Some((lo, ulo)), Some((hi, uhi))) = (lo, hi) {
                if lo == hi {
                    // Pinned: substitute the single value into every constraint.
                    let mut next = others.clone();
                    for &l in &lowers {
                        let a = -self.pool[l].coeff(&x);
                        next.push(self.derive(Rel::Le, vec![(l, 1), (uhi, a)], derivs)?);
                    }
                    for &u in &uppers {
                        let b = self.pool[u].coeff(&x);
                        next.push(self.derive(Rel::Le, vec![(u, 1), (ulo, b)], derivs)?);
                    }
                    return match self.refute(next, depth + 1, relaxed)? {
                        Outcome::Sat(sigma) => self.extend(sigma, &x, &x_cons),
                        other => Ok(other),
                    };
                }
            }
        }

        if lowers.len() * uppers.len() > MAX_PAIRS {
            return Err(LiaError::Resource("elimination produces too many constraints".into()));
        }
        let pool_mark = self.pool.len();
        let deriv_mark = derivs.len();
        let mut shadow = others.clone();
        for &l in &lowers {
            for &u in &uppers {
                let a = -self.pool[l].coeff(&x);
                let b = self.pool[u].coeff(&x);
                shadow.push(self.derive(Rel::Le, vec![(l, b), (u, a)], derivs)?);
            }
        }
        let shadow_relaxed = relaxed || !exact;
        match self.refute(shadow, depth + 1, shadow_relaxed)? {
            Outcome::Unsat(p) => return Ok(Outcome::Unsat(p)),
            Outcome::Sat(sigma) => return self.extend(sigma, &x, &x_cons),
            Outcome::Open if exact || relaxed => return Ok(Outcome::Open),
            Outcome::Open => {}
        }

        // The real shadow is satisfiable but x has non-unit coefficients on
        // both sides: bisect its range.
        self.pool.truncate(pool_mark);
        derivs.truncate(deriv_mark);
        let (Some((lo, _)), Some((hi, _))) = (lo, hi) else {
            return Err(LiaError::Resource(format!("variable `{x}` lacks bounds")));
        };
        let mid = lo + (hi - lo).div_euclid(2);
        let cut = LinearConstraint::le(&[(x.as_str(), 1)], -mid);
        let neg = negate_cut(&cut).map_err(overflow)?;
        let at = self.pool.len();
        let mut branch = active.clone();
        branch.push(at);

        self.pool.push(cut.clone());
        let first = self.refute(branch.clone(), depth + 1, false);
        self.pool.truncate(at);
        let le = match first? {
            Outcome::Unsat(p) => p,
            other => return Ok(other),
        };
        self.pool.push(neg);
        let second = self.refute(branch, depth + 1, false);
        self.pool.truncate(at);
        let gt = match second? {
            Outcome::Unsat(p) => p,
            other => return Ok(other),
        };
        Ok(Outcome::Unsat(Proof {
            steps: Vec::new(),
            end: ProofEnd::Split { cut, le: Box::new(le), gt: Box::new(gt) },
        }))
    }

    /// Tightest unary bounds `lo <= x <= hi` among `active`, with the
    /// indices of the constraints providing them.
    #[allow(clippy::type_complexity)]
    fn unary_bounds(&self, x: &str, active: &[usize]) -> (Option<(i128, usize)>, Option<(i128, usize)>) {
        let mut lo: Option<(i128, usize)> = None;
        let mut hi: Option<(i128, usize)> = None;
        for &i in active {
            let c = &self.pool[i];
            if c.coeffs.len() != 1 {
                continue;
            }
            match c.coeff(x) {
                // -x + k <= 0  ->  x >= k
                -1 if lo.is_none_or(|(v, _)| c.constant > v) => lo = Some((c.constant, i)),
                // x + k <= 0  ->  x <= -k
                1 if hi.is_none_or(|(v, _)| -c.constant < v) => hi = Some((-c.constant, i)),
                _ => {}
            }
        }
        (lo, hi)
    }

    /// Picks a value for `x` satisfying `cons` given the other variables.
    fn extend(&self, mut sigma: Assignment, x: &str, cons: &[usize]) -> Result<Outcome, LiaError> {
        let mut lo: Option<i128> = None;
        let mut hi: Option<i128> = None;
        for &i in cons {
            let c = &self.pool[i];
            for v in c.coeffs.keys() {
                if v != x {
                    sigma.entry(v.clone()).or_insert(0);
                }
            }
            let a = c.coeff(x);
            let r = rest_value(c, x, &sigma).ok_or_else(|| overflow(ReplayError::Overflow))?;
            if a > 0 {
                // a*x + r <= 0  ->  x <= floor(-r / a)
                let b = (-r).div_euclid(a);
                hi = Some(hi.map_or(b, |h| h.min(b)));
            } else {
                // -|a|*x + r <= 0  ->  x >= ceil(r / |a|)
                let b = ceil_div(r, -a);
                lo = Some(lo.map_or(b, |l| l.max(b)));
            }
        }
        let v = match (lo, hi) {
            (Some(l), Some(h)) if l > h => {
                return Err(LiaError::Internal(format!("no integer value for `{x}` in [{l}, {h}]")))
            }
            (Some(l), _) => l,
            (None, Some(h)) => h.min(0),
            (None, None) => 0,
        };
        sigma.insert(x.to_string(), v);
        Ok(Outcome::Sat(sigma))
    }
}

/// Bounded enumeration over the unary bounds of `cube`; `None` if some
/// variable is unbounded or the box has more than `max_points` points.
pub fn enumerate_sat(cube: &[LinearConstraint], max_points: u128) -> Option<Option<Assignment>> {
    let vars: BTreeSet<&String> = cube.iter().flat_map(|c| c.coeffs.keys()).collect();
    let mut ranges: HashMap<&String, (i128, i128)> = HashMap::new();
    for v in &vars {
        let mut lo = None;
        let mut hi = None;
        for c in cube {
            if c.coeffs.len() == 1 && c.rel == Rel::Le {
                let a = c.coeff(v);
                if a > 0 {
                    let b = (-c.constant).div_euclid(a);
                    hi = Some(hi.map_or(b, |h: i128| h.min(b)));
                } else if a < 0 {
                    let b = ceil_div(c.constant, -a);
                    lo = Some(lo.map_or(b, |l: i128| l.max(b)));
                }
            }
        }
        ranges.insert(v, (lo?, hi?));
    }
    let mut points: u128 = 1;
    for (lo, hi) in ranges.values() {
        if hi < lo {
            return Some(None);
        }
        points = points.checked_mul((hi - lo + 1) as u128)?;
    }
    if points > max_points {
        return None;
    }
    let order: Vec<&String> = vars.into_iter().collect();
    let mut sigma: Assignment = order.iter().map(|v| ((*v).clone(), ranges[v].0)).collect();
    loop {
        if cube.iter().all(|c| c.holds(&sigma) == Some(true)) {
            return Some(Some(sigma));
        }
        let mut k = 0;
        loop {
            if k == order.len() {
                return Some(None);
            }
            let (lo, hi) = ranges[order[k]];
            let slot = sigma.get_mut(order[k]).unwrap();
            if *slot < hi {
                *slot += 1;
                break;
            }
            *slot = lo;
            k += 1;
        }
    }
}
