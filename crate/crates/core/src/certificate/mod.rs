//! Self-contained certificates for proved invariants.

mod check;
mod format;
pub mod sexp;

use thiserror::Error;

pub use check::{check, CheckStats, CheckVerdict, RejectCode};
pub use format::{proof_from_sexp, proof_to_sexp, tree_from_sexp, tree_to_sexp, Certificate, MAGIC};

use crate::model::{canonical_text, text_digest, SfcModel};
use crate::property::Property;
use crate::semantics::InitActions;
use crate::verifier::VerifyResult;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("cannot certify a {0} result")]
    NotProved(&'static str),
}

/// Builds the certificate for a proved property. The init-actions mode must
/// be the one the proof was produced with.
pub fn emit(
    model: &SfcModel,
    property: &Property,
    result: &VerifyResult,
    init_actions: InitActions,
) -> Result<Certificate, EmitError> {
    let VerifyResult::Proved(tree) = result else {
        return Err(EmitError::NotProved(result.verdict()));
    };
    let model_text = canonical_text(model);
    Ok(Certificate {
        digest: text_digest(&model_text),
        init_actions,
        model_text,
        property_text: format!("{property}\n"),
        tree: tree.clone(),
    })
}

/// Source files the checker depends on, relative to the core crate root.
pub fn trusted_core_inventory() -> Vec<&'static str> {
    vec![
        "src/certificate/check.rs",
        "src/certificate/format.rs",
        "src/certificate/sexp.rs",
        "src/syntax/lexer.rs",
        "src/syntax/parser.rs",
        "src/model/mod.rs",
        "src/model/print.rs",
        "src/model/validate.rs",
        "src/fbd/mod.rs",
        "src/expr/mod.rs",
        "src/expr/eval.rs",
        "src/expr/normalize.rs",
        "src/property/mod.rs",
        "src/semantics/state.rs",
        "src/obligation/mod.rs",
        "src/obligation/tree.rs",
        "src/lia/witness.rs",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_model, parse_properties};
    use crate::verifier::{verify_invariant, VerifyOptions};

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

    fn certificate(prop: &str) -> (SfcModel, Property, Certificate) {
        let m = parse_model(LOOP).unwrap();
        let p = parse_properties(prop, &m).unwrap().remove(0);
        let r = verify_invariant(&m, &p.formula, VerifyOptions::default());
        let c = emit(&m, &p, &r, InitActions::FromSteps).unwrap();
        (m, p, c)
    }

    const SAFE: &str = "invariant safe : always (x <= 10 && (!action(A_Init) || x <= 9) \
        && (!step(Step2) || x <= 9) && (!action(A_Init) || !step(Step2)));";

    #[test]
    fn round_trip_is_accepted() {
        let (_, _, c) = certificate(SAFE);
        let text = c.to_text();
        assert_eq!(Certificate::parse(&text).unwrap(), c);
        let v = check(text.as_bytes());
        assert!(v.is_accepted(), "{v}");
        let (_, _, again) = certificate(SAFE);
        assert_eq!(again.to_text(), text);
    }

    #[test]
    fn refuses_unproved_results() {
        let m = parse_model(LOOP).unwrap();
        let p = parse_properties("invariant weak : always (x <= 10);", &m).unwrap().remove(0);
        let r = verify_invariant(&m, &p.formula, VerifyOptions::default());
        assert_eq!(emit(&m, &p, &r, InitActions::FromSteps), Err(EmitError::NotProved("Refuted")));
    }

    #[test]
    fn edited_guard_is_rejected_at_a_leaf() {
        let (_, _, c) = certificate(SAFE);
        let mut forged = c.clone();
        forged.model_text = c.model_text.replace("x < 10", "x < 11");
        forged.digest = text_digest(&forged.model_text);
        match check(forged.to_text().as_bytes()) {
            CheckVerdict::Rejected { code, path, .. } => {
                assert!(matches!(code, RejectCode::Witness | RejectCode::Clash | RejectCode::Shape), "{code}");
                assert!(path.starts_with("case["), "{path}");
            }
            v => panic!("{v}"),
        }
    }

    #[test]
    fn deleted_case_is_a_coverage_failure() {
        let (_, _, mut c) = certificate(SAFE);
        if let crate::obligation::ProofTree::Induction { cases, .. } = &mut c.tree {
            cases.remove(2);
        }
        assert!(matches!(check(c.to_text().as_bytes()), CheckVerdict::Rejected { code: RejectCode::Coverage, .. }));
    }

    #[test]
    fn stale_digest_and_garbage() {
        let (_, _, c) = certificate(SAFE);
        let text = c.to_text().replace("step Step2\n", "step Step3\n");
        assert!(matches!(check(text.as_bytes()), CheckVerdict::Rejected { code: RejectCode::Digest, .. }));
        assert!(matches!(check(b"\xff\xfe"), CheckVerdict::Rejected { code: RejectCode::Parse, .. }));
        assert!(!check(b"CERTPLC/1\n").is_accepted());
    }

    #[test]
    fn trivial_tree_only_for_true() {
        let (_, _, c) = certificate("invariant t : always (true);");
        assert!(check(c.to_text().as_bytes()).is_accepted());
        let (_, _, mut safe) = certificate(SAFE);
        safe.tree = crate::obligation::ProofTree::Trivial;
        assert!(!check(safe.to_text().as_bytes()).is_accepted());
    }

    #[test]
    fn inventory_excludes_search() {
        let inv = trusted_core_inventory();
        assert!(inv.contains(&"src/lia/witness.rs"));
        assert!(inv.contains(&"src/semantics/state.rs"));
        assert!(!inv.iter().any(|f| f.contains("prover") || f.contains("verifier") || f.contains("lia/mod")));
    }
}
