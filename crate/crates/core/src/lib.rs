//! Sequential function charts: semantics, bounded exploration, inductive
//! invariant proofs and independently checkable certificates.

pub mod certificate;
pub mod expr;
pub mod fbd;
pub mod lia;
pub mod model;
pub mod obligation;
pub mod property;
pub mod semantics;
pub mod syntax;
pub mod verifier;

pub use certificate::{check, emit, Certificate, CheckVerdict};
pub use lia::{decide_sat, replay_witness, SatResult};
pub use model::SfcModel;
pub use property::{Formula, Property};
pub use semantics::{ExploreOptions, InitActions, Machine, Scheduler, SfcState};
pub use syntax::{parse_formula, parse_model, parse_properties, ParseError};
pub use verifier::{verify_invariant, VerifyOptions, VerifyResult};
