//! Guard expressions: abstract syntax, parsing, type checking, evaluation.
//!
//! Guards read stores (by bare name when unique model-wide, or as
//! `Machine.store`) and the payload of the thing that fired the trigger's
//! source stage (`payload`, `payload.field`). `mod` is mathematical: the
//! result lies in `[0, n)`.

use std::fmt;

use crate::model::{Model, StoreId, StoreTy};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Mod => "mod",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Mod => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Store(StoreId),
    Payload,
    PayloadField(String),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// Static type of an expression. `Any` is the type of payload references,
/// whose shape is only known at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
    Str,
    Any,
}

impl Ty {
    fn accepts(self, other: Ty) -> bool {
        self == Ty::Any || other == Ty::Any || self == other
    }
}

impl From<StoreTy> for Ty {
    fn from(ty: StoreTy) -> Ty {
        match ty {
            StoreTy::Int => Ty::Int,
            StoreTy::Bool => Ty::Bool,
            StoreTy::String => Ty::Str,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Int => "int",
            Ty::Bool => "bool",
            Ty::Str => "string",
            Ty::Any => "payload",
        })
    }
}

impl Expr {
    /// Infer the expression's type against a model, or describe the mismatch.
    pub fn type_check(&self, model: &Model) -> Result<Ty, String> {
        match self {
            Expr::Int(_) => Ok(Ty::Int),
            Expr::Bool(_) => Ok(Ty::Bool),
            Expr::Str(_) => Ok(Ty::Str),
            Expr::Store(id) => Ok(model.store(*id).ty.into()),
            Expr::Payload | Expr::PayloadField(_) => Ok(Ty::Any),
            Expr::Not(inner) => {
                let ty = inner.type_check(model)?;
                if ty.accepts(Ty::Bool) {
                    Ok(Ty::Bool)
                } else {
                    Err(format!("operator ! needs bool, found {ty}"))
                }
            }
            Expr::Bin(op, lhs, rhs) => {
                let lt = lhs.type_check(model)?;
                let rt = rhs.type_check(model)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Mod => {
                        if lt.accepts(Ty::Int) && rt.accepts(Ty::Int) {
                            Ok(Ty::Int)
                        } else {
                            Err(format!("operator {} needs int operands, found {lt} and {rt}", op.symbol()))
                        }
                    }
                    BinOp::Lt | BinOp::Le => {
                        if lt.accepts(Ty::Int) && rt.accepts(Ty::Int) {
                            Ok(Ty::Bool)
                        } else {
                            Err(format!("operator {} needs int operands, found {lt} and {rt}", op.symbol()))
                        }
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if lt.accepts(rt) {
                            Ok(Ty::Bool)
                        } else {
                            Err(format!("operator {} compares {lt} with {rt}", op.symbol()))
                        }
                    }
                    BinOp::And | BinOp::Or => {
                        if lt.accepts(Ty::Bool) && rt.accepts(Ty::Bool) {
                            Ok(Ty::Bool)
                        } else {
                            Err(format!("operator {} needs bool operands, found {lt} and {rt}", op.symbol()))
                        }
                    }
                }
            }
        }
    }

    /// Render using the model's canonical store references.
    pub fn display<'a>(&'a self, model: &'a Model) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, model }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    model: &'a Model,
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, self.model, 0)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, expr: &Expr, model: &Model, parent_prec: u8) -> fmt::Result {
    match expr {
        Expr::Int(n) => write!(f, "{n}"),
        Expr::Bool(b) => write!(f, "{b}"),
        Expr::Str(s) => write!(f, "{s:?}"),
        Expr::Store(id) => write!(f, "{}", model.store_reference(*id)),
        Expr::Payload => write!(f, "payload"),
        Expr::PayloadField(name) => write!(f, "payload.{name}"),
        Expr::Not(inner) => {
            write!(f, "!")?;
            write_expr(f, inner, model, 6)
        }
        Expr::Bin(op, lhs, rhs) => {
            let prec = op.precedence();
            if prec < parent_prec {
                write!(f, "(")?;
            }
            write_expr(f, lhs, model, prec)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, rhs, model, prec + 1)?;
            if prec < parent_prec {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

/// Payload available to a guard: the payload of the thing whose firing is
/// being tested, when there is one.
pub struct EvalCtx<'a> {
    pub stores: &'a dyn Fn(StoreId) -> Value,
    pub payload: Option<&'a Value>,
}

impl Expr {
    pub fn eval(&self, ctx: &EvalCtx<'_>) -> Result<Value, String> {
        match self {
            Expr::Int(n) => Ok(Value::Int(*n)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Str(s) => Ok(Value::Str(s.clone())),
            Expr::Store(id) => Ok((ctx.stores)(*id)),
            Expr::Payload => ctx
                .payload
                .cloned()
                .ok_or_else(|| "no payload in this context".to_string()),
            Expr::PayloadField(name) => {
                let payload = ctx
                    .payload
                    .ok_or_else(|| "no payload in this context".to_string())?;
                payload
                    .field(name)
                    .cloned()
                    .ok_or_else(|| format!("payload has no field {name:?}"))
            }
            Expr::Not(inner) => {
                let value = inner.eval(ctx)?;
                value
                    .as_bool()
                    .map(|b| Value::Bool(!b))
                    .ok_or_else(|| format!("operator ! needs bool, found {}", value.kind_name()))
            }
            Expr::Bin(op, lhs, rhs) => {
                // short-circuit the boolean connectives
                if matches!(op, BinOp::And | BinOp::Or) {
                    let l = expect_bool(lhs.eval(ctx)?, op.symbol())?;
                    return match (op, l) {
                        (BinOp::And, false) => Ok(Value::Bool(false)),
                        (BinOp::Or, true) => Ok(Value::Bool(true)),
                        _ => Ok(Value::Bool(expect_bool(rhs.eval(ctx)?, op.symbol())?)),
                    };
                }
                let l = lhs.eval(ctx)?;
                let r = rhs.eval(ctx)?;
                match op {
                    BinOp::Add => arith(l, r, op.symbol(), |a, b| Ok(a.wrapping_add(b))),
                    BinOp::Sub => arith(l, r, op.symbol(), |a, b| Ok(a.wrapping_sub(b))),
                    BinOp::Mul => arith(l, r, op.symbol(), |a, b| Ok(a.wrapping_mul(b))),
                    BinOp::Mod => arith(l, r, op.symbol(), |a, b| {
                        if b == 0 {
                            Err("mod by zero".to_string())
                        } else {
                            Ok(a.rem_euclid(b))
                        }
                    }),
                    BinOp::Lt => compare(l, r, op.symbol(), |a, b| a < b),
                    BinOp::Le => compare(l, r, op.symbol(), |a, b| a <= b),
                    BinOp::Eq => equality(l, r).map(Value::Bool),
                    BinOp::Ne => equality(l, r).map(|b| Value::Bool(!b)),
                    BinOp::And | BinOp::Or => unreachable!("handled above"),
                }
            }
        }
    }
}

fn expect_bool(value: Value, op: &str) -> Result<bool, String> {
    value
        .as_bool()
        .ok_or_else(|| format!("operator {op} needs bool, found {}", value.kind_name()))
}

fn arith(l: Value, r: Value, op: &str, f: impl Fn(i64, i64) -> Result<i64, String>) -> Result<Value, String> {
    match (l.as_int(), r.as_int()) {
        (Some(a), Some(b)) => f(a, b).map(Value::Int),
        _ => Err(format!(
            "operator {op} needs int operands, found {} and {}",
            l.kind_name(),
            r.kind_name()
        )),
    }
}

fn compare(l: Value, r: Value, op: &str, f: impl Fn(i64, i64) -> bool) -> Result<Value, String> {
    match (l.as_int(), r.as_int()) {
        (Some(a), Some(b)) => Ok(Value::Bool(f(a, b))),
        _ => Err(format!(
            "operator {op} needs int operands, found {} and {}",
            l.kind_name(),
            r.kind_name()
        )),
    }
}

fn equality(l: Value, r: Value) -> Result<bool, String> {
    match (&l, &r) {
        (Value::Int(a), Value::Int(b)) => Ok(a == b),
        (Value::Bool(a), Value::Bool(b)) => Ok(a == b),
        (Value::Str(a), Value::Str(b)) => Ok(a == b),
        _ => Err(format!(
            "cannot compare {} with {}",
            l.kind_name(),
            r.kind_name()
        )),
    }
}

// ---------------------------------------------------------------------------
// Guard text parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Str(String),
    Ident(String),
    Op(&'static str),
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                chars.next();
            }
            '0'..='9' => {
                let mut n = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        n.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Int(n.parse().map_err(|_| format!("integer {n} out of range"))?));
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            other => return Err(format!("bad escape {other:?} in string")),
                        },
                        Some(c) => s.push(c),
                        None => return Err("unterminated string".to_string()),
                    }
                }
                toks.push(Tok::Str(s));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '.' {
                        word.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Ident(word));
            }
            _ => {
                chars.next();
                let two = |next: char, hit: &'static str, miss: Option<&'static str>,
                           chars: &mut std::iter::Peekable<std::str::Chars>|
                 -> Result<&'static str, String> {
                    if chars.peek() == Some(&next) {
                        chars.next();
                        Ok(hit)
                    } else {
                        miss.ok_or_else(|| format!("unexpected character {c:?}"))
                    }
                };
                let op = match c {
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '(' => "(",
                    ')' => ")",
                    '!' => two('=', "!=", Some("!"), &mut chars)?,
                    '=' => two('=', "==", None, &mut chars)?,
                    '<' => two('=', "<=", Some("<"), &mut chars)?,
                    '&' => two('&', "&&", None, &mut chars)?,
                    '|' => two('|', "||", None, &mut chars)?,
                    other => return Err(format!("unexpected character {other:?}")),
                };
                toks.push(Tok::Op(op));
            }
        }
    }
    Ok(toks)
}

struct GuardParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    model: &'a Model,
}

impl<'a> GuardParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_expr(&mut self, min_prec: u8) -> Result<Expr, String> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op("||")) => BinOp::Or,
                Some(Tok::Op("&&")) => BinOp::And,
                Some(Tok::Op("==")) => BinOp::Eq,
                Some(Tok::Op("!=")) => BinOp::Ne,
                Some(Tok::Op("<")) => BinOp::Lt,
                Some(Tok::Op("<=")) => BinOp::Le,
                Some(Tok::Op("+")) => BinOp::Add,
                Some(Tok::Op("-")) => BinOp::Sub,
                Some(Tok::Op("*")) => BinOp::Mul,
                Some(Tok::Ident(word)) if word == "mod" => BinOp::Mod,
                _ => break,
            };
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.parse_expr(op.precedence() + 1)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, String> {
        if self.eat_op("!") {
            return Ok(Expr::Not(Box::new(self.parse_unary()?)));
        }
        if self.eat_op("-") {
            // negative integer literal only
            return match self.bump() {
                Some(Tok::Int(n)) => Ok(Expr::Int(-n)),
                other => Err(format!("expected integer after -, found {other:?}")),
            };
        }
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Expr::Int(n)),
            Some(Tok::Str(s)) => Ok(Expr::Str(s)),
            Some(Tok::Op("(")) => {
                let inner = self.parse_expr(0)?;
                if self.eat_op(")") {
                    Ok(inner)
                } else {
                    Err("missing )".to_string())
                }
            }
            Some(Tok::Ident(word)) => self.resolve_ident(&word),
            other => Err(format!("expected expression, found {other:?}")),
        }
    }

    fn resolve_ident(&mut self, word: &str) -> Result<Expr, String> {
        if word == "true" {
            return Ok(Expr::Bool(true));
        }
        if word == "false" {
            return Ok(Expr::Bool(false));
        }
        if word == "payload" {
            return Ok(Expr::Payload);
        }
        if let Some(field) = word.strip_prefix("payload.") {
            if field.is_empty() || field.contains('.') {
                return Err(format!("bad payload reference {word:?}"));
            }
            return Ok(Expr::PayloadField(field.to_string()));
        }
        match self.model.lookup_store(word) {
            Ok(id) => Ok(Expr::Store(id)),
            Err(err) => Err(err.to_string()),
        }
    }
}

/// Parse expression text against a model and type-check it.
pub fn parse_expression(text: &str, model: &Model) -> Result<(Expr, Ty), String> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err("empty expression".to_string());
    }
    let mut parser = GuardParser { toks, pos: 0, model };
    let expr = parser.parse_expr(0)?;
    if parser.pos != parser.toks.len() {
        return Err(format!("trailing tokens after expression in {text:?}"));
    }
    let ty = expr.type_check(model)?;
    Ok((expr, ty))
}

/// Parse guard text against a model and type-check it to bool.
pub fn parse_guard(text: &str, model: &Model) -> Result<Expr, String> {
    let (expr, ty) = parse_expression(text, model)?;
    if ty.accepts(Ty::Bool) {
        Ok(expr)
    } else {
        Err(format!("guard must be bool, found {ty}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelBuilder, StageKind};

    fn model_with_stores() -> Model {
        let mut b = ModelBuilder::new();
        let m = b.add_machine("Q", None, None);
        b.add_stage(m, StageKind::Create, None, None, None);
        b.add_store(m, "rear", StoreTy::Int, Value::Int(0), None);
        b.add_store(m, "front", StoreTy::Int, Value::Int(0), None);
        b.add_store(m, "n", StoreTy::Int, Value::Int(4), None);
        b.add_store(m, "blocked", StoreTy::Bool, Value::Bool(false), None);
        b.finish().unwrap()
    }

    fn eval_with(model: &Model, text: &str, rear: i64, front: i64) -> Value {
        let (expr, _) = parse_expression(text, model).unwrap();
        let stores = |id: StoreId| match model.store(id).name.as_str() {
            "rear" => Value::Int(rear),
            "front" => Value::Int(front),
            "n" => Value::Int(4),
            "blocked" => Value::Bool(false),
            _ => unreachable!(),
        };
        expr.eval(&EvalCtx { stores: &stores, payload: None }).unwrap()
    }

    #[test]
    fn full_condition_matches_ring_arithmetic() {
        let model = model_with_stores();
        // (rear+1) mod n == front over all rear/front pairs of a 4-slot ring
        for rear in 0..4 {
            for front in 0..4 {
                let got = eval_with(&model, "(rear + 1) mod n == front", rear, front);
                assert_eq!(got, Value::Bool((rear + 1).rem_euclid(4) == front));
            }
        }
    }

    #[test]
    fn mod_is_mathematical() {
        let model = model_with_stores();
        assert_eq!(eval_with(&model, "(rear - 3) mod n", 1, 0), Value::Int(2));
        assert_eq!(eval_with(&model, "(0 - 1) mod n", 0, 0), Value::Int(3));
    }

    #[test]
    fn precedence_mul_over_add_over_compare() {
        let model = model_with_stores();
        assert_eq!(eval_with(&model, "1 + 2 * 3 == 7", 0, 0), Value::Bool(true));
        assert_eq!(
            eval_with(&model, "1 + 2 <= 3 && !blocked", 0, 0),
            Value::Bool(true)
        );
    }

    #[test]
    fn type_error_reported() {
        let model = model_with_stores();
        let err = parse_guard("rear + true", &model).unwrap_err();
        assert!(err.contains("int"), "unexpected message: {err}");
        assert!(parse_guard("rear", &model).is_err(), "int guard rejected");
    }

    #[test]
    fn unknown_store_reported() {
        let model = model_with_stores();
        let err = parse_guard("ghost == 1", &model).unwrap_err();
        assert!(err.contains("ghost"), "unexpected message: {err}");
    }

    #[test]
    fn payload_reference_is_dynamic() {
        let model = model_with_stores();
        let expr = parse_guard("payload.result", &model).unwrap();
        let payload = Value::record([("result", Value::Bool(true))]);
        let stores = |_: StoreId| Value::Null;
        let got = expr
            .eval(&EvalCtx { stores: &stores, payload: Some(&payload) })
            .unwrap();
        assert_eq!(got, Value::Bool(true));
    }

    #[test]
    fn display_round_trips_through_parser() {
        let model = model_with_stores();
        for text in [
            "(rear + 1) mod n == front",
            "!blocked && rear <= front",
            "payload.result || blocked",
            "(1 + 2) * 3 == 9",
        ] {
            let expr = parse_guard(text, &model).unwrap();
            let printed = expr.display(&model).to_string();
            let reparsed = parse_guard(&printed, &model).unwrap();
            assert_eq!(expr, reparsed, "display {printed:?} reparses");
        }
    }
}
