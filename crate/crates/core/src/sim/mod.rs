//! Deterministic token-flow simulation.

mod engine;
pub mod fns;
pub mod script;
pub mod trace;

pub use engine::{simulate, SimConfig, SimError, MICRO_STEP_CAP};
pub use fns::{builtin_fns, FnCtx, FnOutcome, FnRegistry, StoreView};
pub use script::{Injection, Script, ScriptError};
pub use trace::{RecordKind, Trace, TraceRecord};
