//! Toolkit for five-stage thing-machine models: a textual DSL with a JSON
//! form, structural validation against the flow rule table, a deterministic
//! token-flow simulator with stores and triggers, an event layer with
//! chronology conformance checking, and a bundled corpus of worked models.
//!
//! The pipeline is: parse ([`dsl::parse_model`]) or load JSON
//! ([`dsl::from_json`]), validate ([`validate::validate`]), simulate
//! ([`sim::simulate`]), then detect events and check them against a
//! chronology ([`events`]).

pub mod corpus;
pub mod diag;
pub mod dsl;
pub mod events;
pub mod expr;
pub mod model;
pub mod sim;
pub mod validate;
pub mod value;

pub use diag::{Diagnostic, SourceSpan};
pub use model::{Model, ModelStats, StageKind};
pub use value::Value;
