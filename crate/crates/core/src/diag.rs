//! Diagnostics shared by the parser and the validator.
//!
//! Codes form a closed registry:
//!
//! | code                  | meaning                                             |
//! |-----------------------|-----------------------------------------------------|
//! | E-SYNTAX              | text does not match the grammar                     |
//! | E-DUPLICATE           | machine/stage/store/event/arc redeclared            |
//! | E-UNRESOLVED          | stage path or store reference does not resolve      |
//! | E-TYPE                | guard expression fails type checking                |
//! | E-SCHEMA              | JSON document does not match its schema             |
//! | E-FLOW-ILLEGAL        | flow arc outside the R1/R2 rule table               |
//! | E-ORPHAN-STAGE        | stage with no flow arcs and no trigger arcs at all  |
//! | E-TRIGGER-GUARD       | trigger guard ill-typed or names an unknown store   |
//! | E-AMBIGUOUS           | untagged stage path matches several stages          |
//! | W-UNREACHABLE-RECEIVE | receive stage never fed through a transfer boundary |
//! | W-DEAD-CREATE         | create stage with no outflow, no trigger in, no fn  |
//! | W-TRIGGER-TARGET      | trigger activates a stage that is not a create      |

use std::fmt;

use serde::{Deserialize, Serialize};

/// Location of a construct inside a source text. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(line: u32, column: u32, length: u32) -> Self {
        SourceSpan { line, column, length }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Error,
}

/// One finding about a model or a source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
    /// Element the finding is about (stage path, arc, store path), if any.
    pub path: Option<String>,
    pub span: Option<SourceSpan>,
    /// Declaration order of the offending element; used only for sorting.
    #[serde(skip)]
    pub decl_idx: u32,
}

impl Diagnostic {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            code: code.to_string(),
            message: message.into(),
            path: None,
            span: None,
            decl_idx: u32::MAX,
        }
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn with_span(mut self, span: Option<SourceSpan>) -> Self {
        self.span = span;
        self
    }

    pub fn with_decl_idx(mut self, idx: u32) -> Self {
        self.decl_idx = idx;
        self
    }

    pub fn severity(&self) -> Severity {
        if self.code.starts_with("W-") {
            Severity::Warning
        } else {
            Severity::Error
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)?;
        if let Some(path) = &self.path {
            write!(f, " [{path}]")?;
        }
        if let Some(span) = &self.span {
            write!(f, " at {span}")?;
        }
        Ok(())
    }
}

/// Canonical ordering for diagnostic lists: element declaration order, then code.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        a.decl_idx
            .cmp(&b.decl_idx)
            .then_with(|| a.code.cmp(&b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
