//! The certificate checker. Only replays; never searches.

use std::fmt;

use super::format::Certificate;
use crate::lia::{replay, Proof};
use crate::model::{canonical_text, text_digest, SfcModel};
use crate::obligation::{
    arith_cube, combined_cube, hypothesis_cubes, invariant_conjuncts, is_trivial, negated_conclusion_cubes,
    rule_instances, Entry, HypCase, ProofTree, Sym,
};
use crate::semantics::init_state;
use crate::syntax::{parse_model, parse_properties};

/// Paren nesting allowed in the model and property sections.
const MAX_SOURCE_NESTING: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectCode {
    Parse,
    Digest,
    Model,
    Property,
    Base,
    Coverage,
    Shape,
    Obligation,
    Clash,
    Witness,
}

impl fmt::Display for RejectCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectCode::Parse => "parse",
            RejectCode::Digest => "digest",
            RejectCode::Model => "model",
            RejectCode::Property => "property",
            RejectCode::Base => "base",
            RejectCode::Coverage => "coverage",
            RejectCode::Shape => "shape",
            RejectCode::Obligation => "obligation",
            RejectCode::Clash => "clash",
            RejectCode::Witness => "witness",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CheckStats {
    pub cases: usize,
    pub leaves: usize,
    pub replay_steps: usize,
}

/// `Rejected` only means this certificate does not establish its
/// property, not that the property is false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckVerdict {
    Accepted(CheckStats),
    Rejected { code: RejectCode, path: String, detail: String },
}

impl CheckVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, CheckVerdict::Accepted(_))
    }
}

impl fmt::Display for CheckVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckVerdict::Accepted(s) => {
                write!(f, "Accepted ({} cases, {} leaves, {} replay steps)", s.cases, s.leaves, s.replay_steps)
            }
            CheckVerdict::Rejected { code, path, detail } if path.is_empty() => {
                write!(f, "Rejected [{code}]: {detail}")
            }
            CheckVerdict::Rejected { code, path, detail } => write!(f, "Rejected [{code}] at {path}: {detail}"),
        }
    }
}

struct Reject(RejectCode, String, String);

fn reject(code: RejectCode, path: impl Into<String>, detail: impl ToString) -> Reject {
    Reject(code, path.into(), detail.to_string())
}

fn nesting(text: &str) -> usize {
    let mut depth = 0usize;
    let mut max = 0;
    for c in text.chars() {
        match c {
            '(' | '{' | '[' => {
                depth += 1;
                max = max.max(depth);
            }
            ')' | '}' | ']' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    max
}

/// Checks a certificate given as raw bytes.
pub fn check(bytes: &[u8]) -> CheckVerdict {
    match check_inner(bytes) {
        Ok(stats) => CheckVerdict::Accepted(stats),
        Err(Reject(code, path, detail)) => CheckVerdict::Rejected { code, path, detail },
    }
}

fn check_inner(bytes: &[u8]) -> Result<CheckStats, Reject> {
    let text = std::str::from_utf8(bytes).map_err(|e| reject(RejectCode::Parse, "", e))?;
    let cert = Certificate::parse(text).map_err(|e| reject(RejectCode::Parse, "", e))?;
    if text_digest(&cert.model_text) != cert.digest {
        return Err(reject(RejectCode::Digest, "", "digest does not match the model section"));
    }
    if nesting(&cert.model_text) > MAX_SOURCE_NESTING || nesting(&cert.property_text) > MAX_SOURCE_NESTING {
        return Err(reject(RejectCode::Parse, "", "nesting too deep"));
    }
    let model = parse_model(&cert.model_text).map_err(|e| reject(RejectCode::Model, "", e))?;
    if canonical_text(&model) != cert.model_text {
        return Err(reject(RejectCode::Model, "", "model section is not in canonical form"));
    }
    let props = parse_properties(&cert.property_text, &model).map_err(|e| reject(RejectCode::Property, "", e))?;
    let [prop] = props.as_slice() else {
        return Err(reject(RejectCode::Property, "", "expected exactly one property"));
    };
    if prop.to_string() + "\n" != cert.property_text {
        return Err(reject(RejectCode::Property, "", "property section is not in canonical form"));
    }

    let (base, cases) = match &cert.tree {
        ProofTree::Trivial if is_trivial(&prop.formula) => return Ok(CheckStats::default()),
        ProofTree::Trivial => return Err(reject(RejectCode::Shape, "", "trivial proof of a non-trivial property")),
        ProofTree::Induction { base, cases } => (*base, cases),
    };

    let conjuncts = invariant_conjuncts(&model, &prop.formula).map_err(|e| reject(RejectCode::Property, "", e))?;
    if base != conjuncts.len() {
        return Err(reject(RejectCode::Base, "base", format!("expected {} conjuncts, found {base}", conjuncts.len())));
    }
    check_base(&model, &conjuncts, cert.init_actions)?;

    let rules = rule_instances(&model);
    if cases.len() != rules.len() {
        return Err(reject(
            RejectCode::Coverage,
            "",
            format!("model has {} rule instances, proof covers {}", rules.len(), cases.len()),
        ));
    }
    let mut stats = CheckStats { cases: cases.len(), ..Default::default() };
    for (case, rule) in cases.iter().zip(&rules) {
        let path = format!("case[{rule}]");
        if &case.rule != rule {
            return Err(reject(RejectCode::Coverage, path, format!("found case for {}", case.rule)));
        }
        let hyps = hypothesis_cubes(&model, &conjuncts, rule).map_err(|e| reject(RejectCode::Obligation, &path, e))?;
        if hyps.len() != case.hyps.len() {
            return Err(reject(
                RejectCode::Shape,
                path,
                format!("hypothesis has {} cases, proof has {}", hyps.len(), case.hyps.len()),
            ));
        }
        for (hi, (h, hc)) in hyps.iter().zip(&case.hyps).enumerate() {
            let path = format!("{path}/hyp[{hi}]");
            match hc {
                HypCase::Contradiction(p) => {
                    let cube = arith_cube(&model, h).map_err(|e| reject(RejectCode::Obligation, &path, e))?;
                    replay_leaf(&cube, p, &path, &mut stats)?;
                }
                HypCase::Conjuncts(cs) => {
                    if cs.len() != conjuncts.len() {
                        return Err(reject(RejectCode::Shape, path, "conjunct count mismatch"));
                    }
                    for (ci, (c, cc)) in conjuncts.iter().zip(cs).enumerate() {
                        let path = format!("{path}/conjunct[{ci}]");
                        let negs = negated_conclusion_cubes(&model, c, rule)
                            .map_err(|e| reject(RejectCode::Obligation, &path, e))?;
                        if negs.len() != cc.entries.len() {
                            return Err(reject(
                                RejectCode::Shape,
                                path,
                                format!("{} failure cases, proof has {}", negs.len(), cc.entries.len()),
                            ));
                        }
                        for (ei, (n, e)) in negs.iter().zip(&cc.entries).enumerate() {
                            let path = format!("{path}/entry[{ei}]");
                            match e {
                                Entry::Clash if h.clashes(n) => stats.leaves += 1,
                                Entry::Clash => return Err(reject(RejectCode::Clash, path, "no conflicting atom")),
                                Entry::Refute(p) => {
                                    let cube = combined_cube(&model, h, n)
                                        .map_err(|e| reject(RejectCode::Obligation, &path, e))?;
                                    replay_leaf(&cube, p, &path, &mut stats)?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(stats)
}

fn check_base(model: &SfcModel, conjuncts: &[Sym], mode: crate::semantics::InitActions) -> Result<(), Reject> {
    let init = init_state(model, mode);
    for (i, c) in conjuncts.iter().enumerate() {
        match c.eval(model, &init) {
            Ok(true) => {}
            Ok(false) => return Err(reject(RejectCode::Base, format!("base[{i}]"), format!("{c} is false initially"))),
            Err(e) => return Err(reject(RejectCode::Base, format!("base[{i}]"), e)),
        }
    }
    Ok(())
}

fn replay_leaf(
    cube: &[crate::expr::LinearConstraint],
    p: &Proof,
    path: &str,
    stats: &mut CheckStats,
) -> Result<(), Reject> {
    let s = replay(cube, p).map_err(|e| reject(RejectCode::Witness, path, e))?;
    stats.leaves += 1;
    stats.replay_steps += s.steps;
    Ok(())
}
