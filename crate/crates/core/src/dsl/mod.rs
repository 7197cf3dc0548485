//! Textual DSL front end: parse, emit, and the JSON document form.
//!
//! The concrete grammar is documented in `docs/dsl.md`. Parsing is total —
//! any input produces either a link-resolved model or diagnostics with
//! source spans — and emitting is canonical: stable ordering, one formatting.

mod emit;
mod json;
mod lexer;
mod parser;

pub use emit::emit_text;
pub use json::{from_json, to_doc, to_json, ModelDoc};
pub use parser::{parse_model, RESERVED};
