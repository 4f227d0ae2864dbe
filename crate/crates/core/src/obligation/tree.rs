use crate::lia::Proof;
use crate::semantics::RuleInstance;

/// Proof of an invariant.
///
/// `Induction` holds the number of invariant conjuncts checked on the
/// initial state and one case per rule instance, in
/// [`rule_instances`](super::rule_instances) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofTree {
    /// The property is the constant `true`.
    Trivial,
    Induction {
        base: usize,
        cases: Vec<RuleCase>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleCase {
    pub rule: RuleInstance,
    /// One entry per cube of the hypothesis.
    pub hyps: Vec<HypCase>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypCase {
    /// The hypothesis cube itself has no integer solution.
    Contradiction(Proof),
    /// One entry per invariant conjunct.
    Conjuncts(Vec<ConjunctCase>),
}

/// One entry per cube of the negated post-state conjunct.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConjunctCase {
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry {
    /// Hypothesis and failure case fix some atom differently.
    Clash,
    Refute(Proof),
}

impl ProofTree {
    /// Number of arithmetic leaves plus base checks.
    pub fn obligations(&self) -> usize {
        match self {
            ProofTree::Trivial => 0,
            ProofTree::Induction { base, cases } => {
                base + cases
                    .iter()
                    .flat_map(|c| &c.hyps)
                    .map(|h| match h {
                        HypCase::Contradiction(_) => 1,
                        HypCase::Conjuncts(cs) => cs.iter().map(|c| c.entries.len()).sum(),
                    })
                    .sum::<usize>()
            }
        }
    }

    /// Total size of all witnesses.
    pub fn witness_size(&self) -> usize {
        let ProofTree::Induction { cases, .. } = self else { return 0 };
        cases
            .iter()
            .flat_map(|c| &c.hyps)
            .map(|h| match h {
                HypCase::Contradiction(p) => p.size(),
                HypCase::Conjuncts(cs) => cs
                    .iter()
                    .flat_map(|c| &c.entries)
                    .map(|e| match e {
                        Entry::Clash => 1,
                        Entry::Refute(p) => p.size(),
                    })
                    .sum(),
            })
            .sum()
    }
}
