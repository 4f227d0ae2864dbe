//! Certificate text layout.
//!
//! ```text
//! CERTPLC/1
//! digest: <sha-256 of the model section>
//! init-actions: from-steps
//! --- model
//! ...
//! --- property
//! invariant NAME : always (...);
//! --- proof
//! (induction (base N) (case (exec A) ...) ...)
//! ```

use std::collections::BTreeMap;

use super::sexp::{self, Sexp};
use crate::expr::{LinearConstraint, Rel};
use crate::lia::{Derivation, Proof, ProofEnd};
use crate::obligation::{ConjunctCase, Entry, HypCase, ProofTree, RuleCase};
use crate::semantics::{InitActions, RuleInstance};

pub const MAGIC: &str = "CERTPLC/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub digest: String,
    pub init_actions: InitActions,
    pub model_text: String,
    pub property_text: String,
    pub tree: ProofTree,
}

impl Certificate {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("digest: {}\n", self.digest));
        out.push_str(&format!("init-actions: {}\n", self.init_actions));
        out.push_str("--- model\n");
        out.push_str(&self.model_text);
        out.push_str("--- property\n");
        out.push_str(&self.property_text);
        out.push_str("--- proof\n");
        tree_to_sexp(&self.tree).pretty(0, &mut out);
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Certificate, String> {
        let rest = text.strip_prefix(MAGIC).and_then(|r| r.strip_prefix('\n')).ok_or("missing magic line")?;
        let (digest_line, rest) = rest.split_once('\n').ok_or("missing digest line")?;
        let digest = digest_line.strip_prefix("digest: ").ok_or("malformed digest line")?.to_string();
        let (mode_line, rest) = rest.split_once('\n').ok_or("missing init-actions line")?;
        let init_actions =
            mode_line.strip_prefix("init-actions: ").ok_or("malformed init-actions line")?.parse::<InitActions>()?;
        let rest = rest.strip_prefix("--- model\n").ok_or("missing model section")?;
        let (model_text, rest) = split_section(rest, "--- property\n").ok_or("missing property section")?;
        let (property_text, proof_text) = split_section(rest, "--- proof\n").ok_or("missing proof section")?;
        let sx = sexp::parse(proof_text).map_err(|e| format!("proof at byte {}: {}", e.offset, e.message))?;
        let tree = tree_from_sexp(&sx)?;
        Ok(Certificate {
            digest,
            init_actions,
            model_text: model_text.to_string(),
            property_text: property_text.to_string(),
            tree,
        })
    }
}

/// Splits at a separator line; the first part keeps its final newline.
fn split_section<'a>(text: &'a str, sep: &str) -> Option<(&'a str, &'a str)> {
    if let Some(rest) = text.strip_prefix(sep) {
        return Some(("", rest));
    }
    let at = text.find(&format!("\n{sep}"))?;
    Some((&text[..at + 1], &text[at + 1 + sep.len()..]))
}

fn rule_to_sexp(r: &RuleInstance) -> Sexp {
    match r {
        RuleInstance::Exec(a) => Sexp::list("exec", [Sexp::atom(a)]),
        RuleInstance::Trans(t) => Sexp::list("trans", [Sexp::atom(t)]),
        RuleInstance::React(s) => Sexp::list("react", [Sexp::atom(s)]),
    }
}

fn rel_atom(r: Rel) -> Sexp {
    Sexp::atom(match r {
        Rel::Le => "le",
        Rel::Eq => "eq",
    })
}

fn constraint_to_sexp(c: &LinearConstraint) -> Sexp {
    let mut items = vec![rel_atom(c.rel), Sexp::atom(c.constant)];
    items.extend(c.coeffs.iter().map(|(v, k)| Sexp::List(vec![Sexp::atom(v), Sexp::atom(k)])));
    Sexp::List(items)
}

pub fn proof_to_sexp(p: &Proof) -> Sexp {
    let mut items = vec![Sexp::atom("proof")];
    for d in &p.steps {
        let mut ds = vec![Sexp::atom("d"), rel_atom(d.rel)];
        ds.extend(d.terms.iter().map(|(i, m)| Sexp::List(vec![Sexp::atom(i), Sexp::atom(m)])));
        items.push(Sexp::List(ds));
    }
    items.push(match &p.end {
        ProofEnd::Conclude(i) => Sexp::list("conclude", [Sexp::atom(i)]),
        ProofEnd::Split { cut, le, gt } => {
            Sexp::list("split", [constraint_to_sexp(cut), proof_to_sexp(le), proof_to_sexp(gt)])
        }
    });
    Sexp::List(items)
}

pub fn tree_to_sexp(t: &ProofTree) -> Sexp {
    match t {
        ProofTree::Trivial => Sexp::list("trivial", []),
        ProofTree::Induction { base, cases } => {
            let mut items = vec![Sexp::atom("induction"), Sexp::list("base", [Sexp::atom(base)])];
            for c in cases {
                let mut cs = vec![Sexp::atom("case"), rule_to_sexp(&c.rule)];
                for h in &c.hyps {
                    cs.push(match h {
                        HypCase::Contradiction(p) => Sexp::list("contradiction", [proof_to_sexp(p)]),
                        HypCase::Conjuncts(conj) => Sexp::list(
                            "conjuncts",
                            conj.iter().map(|cc| {
                                Sexp::list(
                                    "conjunct",
                                    cc.entries.iter().map(|e| match e {
                                        Entry::Clash => Sexp::list("clash", []),
                                        Entry::Refute(p) => Sexp::list("refute", [proof_to_sexp(p)]),
                                    }),
                                )
                            }),
                        ),
                    });
                }
                items.push(Sexp::List(cs));
            }
            Sexp::List(items)
        }
    }
}

fn expect<'a>(s: &'a Sexp, head: &str) -> Result<&'a [Sexp], String> {
    match s.head() {
        Some((h, rest)) if h == head => Ok(rest),
        _ => Err(format!("expected `({head} ...)`")),
    }
}

fn num<T: std::str::FromStr>(s: &Sexp) -> Result<T, String> {
    let a = s.as_atom().ok_or("expected a number")?;
    // Canonical decimal only: no leading `+` or zeros.
    let canonical =
        a == "0" || a.strip_prefix('-').unwrap_or(a).chars().next().is_some_and(|c| ('1'..='9').contains(&c));
    if !canonical {
        return Err(format!("`{a}` is not a canonical decimal"));
    }
    a.parse().map_err(|_| format!("`{a}` is not a valid number"))
}

fn ident(s: &Sexp) -> Result<String, String> {
    s.as_atom().map(str::to_string).ok_or_else(|| "expected a name".to_string())
}

fn rel_from(s: &Sexp) -> Result<Rel, String> {
    match s.as_atom() {
        Some("le") => Ok(Rel::Le),
        Some("eq") => Ok(Rel::Eq),
        _ => Err("expected `le` or `eq`".into()),
    }
}

fn pair<A: std::str::FromStr, B: std::str::FromStr>(
    s: &Sexp,
    first: impl Fn(&Sexp) -> Result<A, String>,
) -> Result<(A, B), String> {
    match s {
        Sexp::List(items) if items.len() == 2 => Ok((first(&items[0])?, num(&items[1])?)),
        _ => Err("expected a pair".into()),
    }
}

fn constraint_from(s: &Sexp) -> Result<LinearConstraint, String> {
    let Sexp::List(items) = s else { return Err("expected a constraint".into()) };
    if items.len() < 2 {
        return Err("expected a constraint".into());
    }
    let rel = rel_from(&items[0])?;
    let constant: i128 = num(&items[1])?;
    let mut coeffs = BTreeMap::new();
    for it in &items[2..] {
        let (v, k): (String, i128) = pair(it, ident)?;
        if k == 0 || coeffs.insert(v, k).is_some() {
            return Err("zero or repeated coefficient".into());
        }
    }
    Ok(LinearConstraint::new(coeffs, constant, rel))
}

pub fn proof_from_sexp(s: &Sexp) -> Result<Proof, String> {
    let items = expect(s, "proof")?;
    let (end, steps) = items.split_last().ok_or("empty proof")?;
    let steps = steps
        .iter()
        .map(|d| {
            let rest = expect(d, "d")?;
            let (rel, terms) = rest.split_first().ok_or("empty derivation")?;
            Ok(Derivation {
                rel: rel_from(rel)?,
                terms: terms.iter().map(|t| pair(t, num)).collect::<Result<_, String>>()?,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let end = match end.head() {
        Some(("conclude", [i])) => ProofEnd::Conclude(num(i)?),
        Some(("split", [cut, le, gt])) => ProofEnd::Split {
            cut: constraint_from(cut)?,
            le: Box::new(proof_from_sexp(le)?),
            gt: Box::new(proof_from_sexp(gt)?),
        },
        _ => return Err("expected `conclude` or `split`".into()),
    };
    Ok(Proof { steps, end })
}

fn rule_from(s: &Sexp) -> Result<RuleInstance, String> {
    match s.head() {
        Some(("exec", [a])) => Ok(RuleInstance::Exec(ident(a)?)),
        Some(("trans", [t])) => Ok(RuleInstance::Trans(num(t)?)),
        Some(("react", [st])) => Ok(RuleInstance::React(ident(st)?)),
        _ => Err("expected a rule instance".into()),
    }
}

pub fn tree_from_sexp(s: &Sexp) -> Result<ProofTree, String> {
    match s.head() {
        Some(("trivial", [])) => Ok(ProofTree::Trivial),
        Some(("induction", [base, cases @ ..])) => {
            let base = match expect(base, "base")? {
                [n] => num(n)?,
                _ => return Err("expected `(base N)`".into()),
            };
            let cases = cases
                .iter()
                .map(|c| {
                    let items = expect(c, "case")?;
                    let (rule, hyps) = items.split_first().ok_or("empty case")?;
                    let hyps = hyps
                        .iter()
                        .map(|h| match h.head() {
                            Some(("contradiction", [p])) => Ok(HypCase::Contradiction(proof_from_sexp(p)?)),
                            Some(("conjuncts", conj)) => Ok(HypCase::Conjuncts(
                                conj.iter()
                                    .map(|cc| {
                                        let entries = expect(cc, "conjunct")?
                                            .iter()
                                            .map(|e| match e.head() {
                                                Some(("clash", [])) => Ok(Entry::Clash),
                                                Some(("refute", [p])) => Ok(Entry::Refute(proof_from_sexp(p)?)),
                                                _ => Err("expected `clash` or `refute`".to_string()),
                                            })
                                            .collect::<Result<_, String>>()?;
                                        Ok(ConjunctCase { entries })
                                    })
                                    .collect::<Result<_, String>>()?,
                            )),
                            _ => Err("expected `contradiction` or `conjuncts`".to_string()),
                        })
                        .collect::<Result<_, String>>()?;
                    Ok(RuleCase { rule: rule_from(rule)?, hyps })
                })
                .collect::<Result<_, String>>()?;
            Ok(ProofTree::Induction { base, cases })
        }
        _ => Err("expected `trivial` or `induction`".into()),
    }
}
