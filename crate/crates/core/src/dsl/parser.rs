//! Recursive-descent parser for the model DSL.
//!
//! The parser is total: any input yields either a fully link-resolved model
//! or a list of diagnostics with source spans. Error recovery resynchronizes
//! at the next `;` (or the enclosing `}`), so several problems are reported
//! in one pass.

use crate::diag::{sort_diagnostics, Diagnostic, SourceSpan};
use crate::model::{
    MachineId, Model, ModelBuilder, PendingEvent, PendingFlow, PendingTrigger, StageKind, StoreTy,
};
use crate::value::Value;

use super::lexer::{lex, TokKind, Token};

/// Words that cannot be used as machine, store, tag, or event identifiers.
pub const RESERVED: &[&str] = &[
    "machine", "flow", "trigger", "store", "event", "region", "label", "when", "carries", "fn",
    "create", "process", "release", "transfer", "receive", "int", "bool", "string", "true",
    "false", "mod", "payload",
];

pub fn parse_model(source: &str) -> Result<Model, Vec<Diagnostic>> {
    let lexed = lex(source);
    let mut parser = Parser {
        source,
        tokens: lexed.tokens,
        pos: 0,
        diags: lexed.diags,
        builder: ModelBuilder::new(),
    };
    parser.parse_items(None);
    let Parser { diags, builder, .. } = parser;
    match builder.finish() {
        Ok(model) if diags.is_empty() => Ok(model),
        Ok(_) => {
            let mut diags = diags;
            sort_diagnostics(&mut diags);
            Err(diags)
        }
        Err(builder_diags) => {
            let mut diags = diags;
            diags.extend(builder_diags);
            sort_diagnostics(&mut diags);
            Err(diags)
        }
    }
}

struct Parser<'a> {
    source: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    builder: ModelBuilder,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at_kind(&self, kind: &TokKind) -> bool {
        self.peek().map(|t| &t.kind) == Some(kind)
    }

    fn eat(&mut self, kind: &TokKind) -> bool {
        if self.at_kind(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn current_span(&self) -> Option<SourceSpan> {
        self.peek()
            .map(|t| t.span)
            .or_else(|| self.tokens.last().map(|t| t.span))
    }

    fn error_here(&mut self, message: impl Into<String>) {
        let span = self.current_span();
        self.diags
            .push(Diagnostic::new("E-SYNTAX", message).with_span(span));
    }

    /// Skip to just past the next `;`, or stop before `}` / end of input.
    fn resync(&mut self) {
        while let Some(tok) = self.peek() {
            match tok.kind {
                TokKind::Semi => {
                    self.pos += 1;
                    return;
                }
                TokKind::RBrace => return,
                _ => self.pos += 1,
            }
        }
    }

    fn expect_semi(&mut self) {
        if !self.eat(&TokKind::Semi) {
            self.error_here("expected ';'");
            self.resync();
        }
    }

    /// Expect an identifier usable as a name; reserved words are rejected.
    fn expect_name(&mut self, what: &str) -> Option<(String, SourceSpan)> {
        match self.peek().cloned() {
            Some(tok) => {
                if let Some(word) = tok.ident() {
                    if RESERVED.contains(&word) {
                        self.error_here(format!("reserved word {word:?} cannot name a {what}"));
                        return None;
                    }
                    let word = word.to_string();
                    self.pos += 1;
                    Some((word, tok.span))
                } else {
                    self.error_here(format!("expected {what} name"));
                    None
                }
            }
            None => {
                self.error_here(format!("expected {what} name"));
                None
            }
        }
    }

    fn parse_items(&mut self, parent: Option<MachineId>) {
        loop {
            let Some(tok) = self.peek().cloned() else {
                if parent.is_some() {
                    self.error_here("expected '}' to close machine body");
                }
                return;
            };
            match &tok.kind {
                TokKind::RBrace => {
                    if parent.is_some() {
                        self.pos += 1;
                    } else {
                        self.error_here("unexpected '}'");
                        self.pos += 1;
                        continue;
                    }
                    return;
                }
                TokKind::Ident(word) => match word.as_str() {
                    "machine" => {
                        self.pos += 1;
                        self.parse_machine(parent, tok.span);
                    }
                    "store" => {
                        self.pos += 1;
                        self.parse_store(parent, tok.span);
                    }
                    "flow" if parent.is_none() => {
                        self.pos += 1;
                        self.parse_flow(tok.span);
                    }
                    "trigger" if parent.is_none() => {
                        self.pos += 1;
                        self.parse_trigger(tok.span);
                    }
                    "event" if parent.is_none() => {
                        self.pos += 1;
                        self.parse_event(tok.span);
                    }
                    kind_word if StageKind::from_keyword(kind_word).is_some() => {
                        if let Some(owner) = parent {
                            self.pos += 1;
                            self.parse_stage(owner, StageKind::from_keyword(kind_word).unwrap(), tok.span);
                        } else {
                            self.error_here(format!(
                                "stage '{kind_word}' must be declared inside a machine"
                            ));
                            self.resync();
                        }
                    }
                    other => {
                        let where_ = if parent.is_some() {
                            "in a machine body"
                        } else {
                            "at top level"
                        };
                        self.error_here(format!("unexpected {other:?} {where_}"));
                        self.resync();
                    }
                },
                _ => {
                    self.error_here("expected an item");
                    self.resync();
                }
            }
        }
    }

    fn parse_machine(&mut self, parent: Option<MachineId>, span: SourceSpan) {
        let Some((name, _)) = self.expect_name("machine") else {
            self.resync();
            return;
        };
        if !self.eat(&TokKind::LBrace) {
            self.error_here("expected '{' after machine name");
            self.resync();
            return;
        }
        let id = self.builder.add_machine(&name, parent, Some(span));
        self.parse_items(Some(id));
    }

    fn parse_stage(&mut self, owner: MachineId, kind: StageKind, span: SourceSpan) {
        let tag = if self.eat(&TokKind::Hash) {
            match self.expect_name("stage tag") {
                Some((tag, _)) => Some(tag),
                None => {
                    self.resync();
                    return;
                }
            }
        } else {
            None
        };
        let fn_name = if matches!(self.peek().and_then(Token::ident), Some("fn")) {
            self.pos += 1;
            match self.expect_name("function") {
                Some((name, _)) => Some(name),
                None => {
                    self.resync();
                    return;
                }
            }
        } else {
            None
        };
        self.builder
            .add_stage(owner, kind, tag.as_deref(), fn_name.as_deref(), Some(span));
        self.expect_semi();
    }

    fn parse_store(&mut self, parent: Option<MachineId>, span: SourceSpan) {
        let Some(owner) = parent else {
            self.error_here("store declarations must appear inside a machine");
            self.resync();
            return;
        };
        let Some((name, _)) = self.expect_name("store") else {
            self.resync();
            return;
        };
        if !self.eat(&TokKind::Colon) {
            self.error_here("expected ':' after store name");
            self.resync();
            return;
        }
        let ty = match self.peek().and_then(Token::ident) {
            Some("int") => StoreTy::Int,
            Some("bool") => StoreTy::Bool,
            Some("string") => StoreTy::String,
            _ => {
                self.error_here("expected store type: int, bool, or string");
                self.resync();
                return;
            }
        };
        self.pos += 1;
        if !self.eat(&TokKind::Assign) {
            self.error_here("expected '=' before the initial value");
            self.resync();
            return;
        }
        let Some(initial) = self.parse_literal() else {
            self.resync();
            return;
        };
        self.builder.add_store(owner, &name, ty, initial, Some(span));
        self.expect_semi();
    }

    fn parse_literal(&mut self) -> Option<Value> {
        match self.bump() {
            Some(Token { kind: TokKind::Int(n), .. }) => Some(Value::Int(n)),
            Some(Token { kind: TokKind::Str(s), .. }) => Some(Value::Str(s)),
            Some(Token { kind: TokKind::Op("-"), .. }) => match self.bump() {
                Some(Token { kind: TokKind::Int(n), .. }) => Some(Value::Int(-n)),
                _ => {
                    self.error_here("expected integer after '-'");
                    None
                }
            },
            Some(tok) if tok.ident() == Some("true") => Some(Value::Bool(true)),
            Some(tok) if tok.ident() == Some("false") => Some(Value::Bool(false)),
            _ => {
                self.error_here("expected a literal");
                None
            }
        }
    }

    /// PATH := IDENT ("." IDENT)* "." KIND ["#" IDENT]
    fn parse_path(&mut self) -> Option<String> {
        let mut segments = Vec::new();
        loop {
            match self.peek().and_then(Token::ident) {
                Some(word) => {
                    segments.push(word.to_string());
                    self.pos += 1;
                }
                None => {
                    self.error_here("expected a stage path");
                    return None;
                }
            }
            if !self.eat(&TokKind::Dot) {
                break;
            }
        }
        if segments.len() < 2 {
            self.error_here("a stage path needs a machine and a stage kind, e.g. M.create");
            return None;
        }
        let mut path = segments.join(".");
        if self.eat(&TokKind::Hash) {
            let (tag, _) = self.expect_name("stage tag")?;
            path.push('#');
            path.push_str(&tag);
        }
        Some(path)
    }

    fn parse_flow(&mut self, span: SourceSpan) {
        let Some(from) = self.parse_path() else {
            self.resync();
            return;
        };
        if !self.eat(&TokKind::Arrow) {
            self.error_here("expected '->' in flow");
            self.resync();
            return;
        }
        let Some(to) = self.parse_path() else {
            self.resync();
            return;
        };
        let carries = if matches!(self.peek().and_then(Token::ident), Some("carries")) {
            self.pos += 1;
            match self.expect_name("thing type") {
                Some((ty, _)) => Some(ty),
                None => {
                    self.resync();
                    return;
                }
            }
        } else {
            None
        };
        self.builder.add_flow(PendingFlow { from, to, carries, span: Some(span) });
        self.expect_semi();
    }

    fn parse_trigger(&mut self, span: SourceSpan) {
        let Some(from) = self.parse_path() else {
            self.resync();
            return;
        };
        if !self.eat(&TokKind::Arrow) {
            self.error_here("expected '->' in trigger");
            self.resync();
            return;
        }
        let Some(to) = self.parse_path() else {
            self.resync();
            return;
        };
        let guard = if matches!(self.peek().and_then(Token::ident), Some("when")) {
            self.pos += 1;
            let start = match self.peek() {
                Some(tok) => tok.start,
                None => {
                    self.error_here("expected a guard expression after 'when'");
                    return;
                }
            };
            let mut end = start;
            while let Some(tok) = self.peek() {
                if matches!(tok.kind, TokKind::Semi | TokKind::RBrace) {
                    break;
                }
                end = tok.end;
                self.pos += 1;
            }
            let text = self.source[start..end].trim().to_string();
            if text.is_empty() {
                self.error_here("expected a guard expression after 'when'");
                self.resync();
                return;
            }
            Some(text)
        } else {
            None
        };
        self.builder.add_trigger(PendingTrigger { from, to, guard, span: Some(span) });
        self.expect_semi();
    }

    fn parse_event(&mut self, span: SourceSpan) {
        let Some((id, _)) = self.expect_name("event") else {
            self.resync();
            return;
        };
        let label = if matches!(self.peek().and_then(Token::ident), Some("label")) {
            self.pos += 1;
            match self.bump() {
                Some(Token { kind: TokKind::Str(text), .. }) => Some(text),
                _ => {
                    self.error_here("expected a string after 'label'");
                    self.resync();
                    return;
                }
            }
        } else {
            None
        };
        if !matches!(self.peek().and_then(Token::ident), Some("region")) {
            self.error_here("expected 'region' in event declaration");
            self.resync();
            return;
        }
        self.pos += 1;
        if !self.eat(&TokKind::LBrace) {
            self.error_here("expected '{' after 'region'");
            self.resync();
            return;
        }
        let mut region = Vec::new();
        loop {
            let Some(path) = self.parse_path() else {
                self.resync();
                return;
            };
            region.push(path);
            if self.eat(&TokKind::Comma) {
                continue;
            }
            if self.eat(&TokKind::RBrace) {
                break;
            }
            self.error_here("expected ',' or '}' in region");
            self.resync();
            return;
        }
        self.builder.add_event(PendingEvent { id, label, region, span: Some(span) });
        self.expect_semi();
    }
}
