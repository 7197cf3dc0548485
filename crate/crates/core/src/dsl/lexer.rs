//! Tokenizer for the model DSL. Any byte string tokenizes; unknown characters
//! become diagnostics, never panics.

use crate::diag::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Ident(String),
    Int(i64),
    Str(String),
    LBrace,
    RBrace,
    Semi,
    Colon,
    Assign,
    Hash,
    Dot,
    Comma,
    Arrow,
    /// Guard operators: + - * ! == != < <= && || ( )
    Op(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokKind,
    pub span: SourceSpan,
    /// Byte range in the source, used to slice guard text verbatim.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            TokKind::Ident(word) => Some(word),
            _ => None,
        }
    }
}

pub struct LexOutput {
    pub tokens: Vec<Token>,
    pub diags: Vec<Diagnostic>,
}

pub fn lex(source: &str) -> LexOutput {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let mut line: u32 = 1;
    let mut column: u32 = 1;
    let mut iter = source.char_indices().peekable();

    macro_rules! push {
        ($kind:expr, $start:expr, $end:expr, $line:expr, $col:expr, $len:expr) => {
            tokens.push(Token {
                kind: $kind,
                span: SourceSpan::new($line, $col, $len),
                start: $start,
                end: $end,
            })
        };
    }

    while let Some((start, c)) = iter.next() {
        let tok_line = line;
        let tok_col = column;
        match c {
            '\n' => {
                line += 1;
                column = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {
                column += 1;
                continue;
            }
            '/' => {
                if matches!(iter.peek(), Some((_, '/'))) {
                    while let Some(&(_, next)) = iter.peek() {
                        if next == '\n' {
                            break;
                        }
                        iter.next();
                    }
                    // the newline (if any) is handled by the main loop
                    column += 2;
                    continue;
                }
                diags.push(
                    Diagnostic::new("E-SYNTAX", "unexpected character '/'")
                        .with_span(Some(SourceSpan::new(tok_line, tok_col, 1))),
                );
                column += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                word.push(c);
                let mut end = start + c.len_utf8();
                while let Some(&(i, next)) = iter.peek() {
                    if next.is_ascii_alphanumeric() || next == '_' {
                        word.push(next);
                        end = i + next.len_utf8();
                        iter.next();
                    } else {
                        break;
                    }
                }
                let len = word.len() as u32;
                column += len;
                push!(TokKind::Ident(word), start, end, tok_line, tok_col, len);
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                digits.push(c);
                let mut end = start + 1;
                while let Some(&(i, next)) = iter.peek() {
                    if next.is_ascii_digit() {
                        digits.push(next);
                        end = i + 1;
                        iter.next();
                    } else {
                        break;
                    }
                }
                let len = digits.len() as u32;
                column += len;
                match digits.parse::<i64>() {
                    Ok(n) => push!(TokKind::Int(n), start, end, tok_line, tok_col, len),
                    Err(_) => diags.push(
                        Diagnostic::new("E-SYNTAX", format!("integer literal {digits} out of range"))
                            .with_span(Some(SourceSpan::new(tok_line, tok_col, len))),
                    ),
                }
            }
            '"' => {
                let mut text = String::new();
                let mut end = start + 1;
                let mut closed = false;
                while let Some((i, next)) = iter.next() {
                    end = i + next.len_utf8();
                    match next {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\n' => {
                            line += 1;
                            column = 1;
                            break;
                        }
                        '\\' => match iter.next() {
                            Some((j, '"')) => {
                                text.push('"');
                                end = j + 1;
                            }
                            Some((j, '\\')) => {
                                text.push('\\');
                                end = j + 1;
                            }
                            Some((j, 'n')) => {
                                text.push('\n');
                                end = j + 1;
                            }
                            other => {
                                diags.push(
                                    Diagnostic::new(
                                        "E-SYNTAX",
                                        format!("bad string escape {:?}", other.map(|(_, c)| c)),
                                    )
                                    .with_span(Some(SourceSpan::new(tok_line, tok_col, 2))),
                                );
                                break;
                            }
                        },
                        other => text.push(other),
                    }
                }
                if closed {
                    let len = (end - start) as u32;
                    column += len;
                    push!(TokKind::Str(text), start, end, tok_line, tok_col, len);
                } else {
                    diags.push(
                        Diagnostic::new("E-SYNTAX", "unterminated string literal")
                            .with_span(Some(SourceSpan::new(tok_line, tok_col, 1))),
                    );
                }
            }
            '-' => {
                if matches!(iter.peek(), Some((_, '>'))) {
                    iter.next();
                    column += 2;
                    push!(TokKind::Arrow, start, start + 2, tok_line, tok_col, 2);
                } else {
                    column += 1;
                    push!(TokKind::Op("-"), start, start + 1, tok_line, tok_col, 1);
                }
            }
            '=' => {
                if matches!(iter.peek(), Some((_, '='))) {
                    iter.next();
                    column += 2;
                    push!(TokKind::Op("=="), start, start + 2, tok_line, tok_col, 2);
                } else {
                    column += 1;
                    push!(TokKind::Assign, start, start + 1, tok_line, tok_col, 1);
                }
            }
            '!' => {
                if matches!(iter.peek(), Some((_, '='))) {
                    iter.next();
                    column += 2;
                    push!(TokKind::Op("!="), start, start + 2, tok_line, tok_col, 2);
                } else {
                    column += 1;
                    push!(TokKind::Op("!"), start, start + 1, tok_line, tok_col, 1);
                }
            }
            '<' => {
                if matches!(iter.peek(), Some((_, '='))) {
                    iter.next();
                    column += 2;
                    push!(TokKind::Op("<="), start, start + 2, tok_line, tok_col, 2);
                } else {
                    column += 1;
                    push!(TokKind::Op("<"), start, start + 1, tok_line, tok_col, 1);
                }
            }
            '&' => {
                if matches!(iter.peek(), Some((_, '&'))) {
                    iter.next();
                    column += 2;
                    push!(TokKind::Op("&&"), start, start + 2, tok_line, tok_col, 2);
                } else {
                    diags.push(
                        Diagnostic::new("E-SYNTAX", "unexpected character '&'")
                            .with_span(Some(SourceSpan::new(tok_line, tok_col, 1))),
                    );
                    column += 1;
                }
            }
            '|' => {
                if matches!(iter.peek(), Some((_, '|'))) {
                    iter.next();
                    column += 2;
                    push!(TokKind::Op("||"), start, start + 2, tok_line, tok_col, 2);
                } else {
                    diags.push(
                        Diagnostic::new("E-SYNTAX", "unexpected character '|'")
                            .with_span(Some(SourceSpan::new(tok_line, tok_col, 1))),
                    );
                    column += 1;
                }
            }
            '{' => {
                column += 1;
                push!(TokKind::LBrace, start, start + 1, tok_line, tok_col, 1);
            }
            '}' => {
                column += 1;
                push!(TokKind::RBrace, start, start + 1, tok_line, tok_col, 1);
            }
            ';' => {
                column += 1;
                push!(TokKind::Semi, start, start + 1, tok_line, tok_col, 1);
            }
            ':' => {
                column += 1;
                push!(TokKind::Colon, start, start + 1, tok_line, tok_col, 1);
            }
            '#' => {
                column += 1;
                push!(TokKind::Hash, start, start + 1, tok_line, tok_col, 1);
            }
            '.' => {
                column += 1;
                push!(TokKind::Dot, start, start + 1, tok_line, tok_col, 1);
            }
            ',' => {
                column += 1;
                push!(TokKind::Comma, start, start + 1, tok_line, tok_col, 1);
            }
            '+' => {
                column += 1;
                push!(TokKind::Op("+"), start, start + 1, tok_line, tok_col, 1);
            }
            '*' => {
                column += 1;
                push!(TokKind::Op("*"), start, start + 1, tok_line, tok_col, 1);
            }
            '(' => {
                column += 1;
                push!(TokKind::Op("("), start, start + 1, tok_line, tok_col, 1);
            }
            ')' => {
                column += 1;
                push!(TokKind::Op(")"), start, start + 1, tok_line, tok_col, 1);
            }
            other => {
                diags.push(
                    Diagnostic::new("E-SYNTAX", format!("unexpected character {other:?}"))
                        .with_span(Some(SourceSpan::new(tok_line, tok_col, 1))),
                );
                column += 1;
            }
        }
    }

    LexOutput { tokens, diags }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_a_machine_header() {
        let out = lex("machine M { create #a fn f; }");
        assert!(out.diags.is_empty());
        let kinds: Vec<&TokKind> = out.tokens.iter().map(|t| &t.kind).collect();
        assert!(matches!(kinds[0], TokKind::Ident(w) if w == "machine"));
        assert!(matches!(kinds[2], TokKind::LBrace));
        assert!(matches!(kinds.last(), Some(TokKind::RBrace)));
    }

    #[test]
    fn comments_run_to_end_of_line() {
        let out = lex("// a comment\nmachine M {}\n");
        assert!(out.diags.is_empty());
        assert!(matches!(&out.tokens[0].kind, TokKind::Ident(w) if w == "machine"));
        assert_eq!(out.tokens[0].span.line, 2);
    }

    #[test]
    fn bad_bytes_become_diagnostics() {
        let out = lex("machine M { @ }");
        assert_eq!(out.diags.len(), 1);
        assert_eq!(out.diags[0].code, "E-SYNTAX");
        assert_eq!(out.diags[0].span.unwrap().column, 13);
    }

    #[test]
    fn arrow_and_minus_distinguished() {
        let out = lex("a -> b - 1");
        let kinds: Vec<&TokKind> = out.tokens.iter().map(|t| &t.kind).collect();
        assert!(matches!(kinds[1], TokKind::Arrow));
        assert!(matches!(kinds[3], TokKind::Op("-")));
    }
}
