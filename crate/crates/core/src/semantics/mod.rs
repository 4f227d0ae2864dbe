//! Operational semantics: configurations, the three rule schemata,
//! successor enumeration, bounded exploration and traces.

mod explore;
mod machine;
mod state;

pub use explore::{Exploration, ExploreError, ExploreOptions, Scheduler, Trace};
pub use machine::{Machine, SemanticsError};
pub use state::{init_state, InitActions, RuleInstance, SfcState};
