//! A small analytic expression language for user-defined metric data.
//!
//! Scalar fields `a_ij(x)` and `b_i(x)` are written over variables
//! `x1..x4` with `+ - * / ^`, the functions `sqrt exp sin cos`, and real
//! literals. Parsing is operator-precedence (Pratt) with `^` binding
//! tightest and right-associative, then unary minus, then `* /`, then
//! `+ -`. Exponents are restricted to real literals so jet evaluation
//! stays single-variable per composition.

use std::fmt;

use thiserror::Error;

use crate::jet::{Jet, JetError};

#[derive(Debug, Error, PartialEq)]
#[error("parse error at {line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Error, PartialEq)]
#[error("evaluation error at offset {offset}: {msg}")]
pub struct EvalError {
    pub offset: usize,
    pub msg: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Num(f64),
    /// Zero-based variable index (`x1` is index 0).
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Base raised to a real-literal exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    /// Byte offset of the node start in the source text.
    pub offset: usize,
}

/// Structural equality; source offsets are ignored.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    /// Largest variable index used, or `None` for constant expressions.
    pub fn max_var(&self) -> Option<usize> {
        match &self.kind {
            ExprKind::Num(_) => None,
            ExprKind::Var(i) => Some(*i),
            ExprKind::Neg(e) | ExprKind::Call(_, e) | ExprKind::Pow(e, _) => e.max_var(),
            ExprKind::Bin(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Evaluates on jet-valued variables; `vars[i]` is the jet of `x(i+1)`.
    pub fn eval_jet(&self, vars: &[Jet]) -> Result<Jet, EvalError> {
        let err = |offset: usize, msg: String| EvalError { offset, msg };
        let jet_err = |offset: usize, e: JetError| EvalError {
            offset,
            msg: e.to_string(),
        };
        match &self.kind {
            ExprKind::Num(v) => {
                let shape = vars
                    .first()
                    .map(|j| j.shape())
                    .ok_or_else(|| err(self.offset, "no variables supplied".into()))?;
                Ok(Jet::constant(shape, *v))
            }
            ExprKind::Var(i) => vars
                .get(*i)
                .cloned()
                .ok_or_else(|| err(self.offset, format!("variable x{} not bound", i + 1))),
            ExprKind::Neg(e) => Ok(e.eval_jet(vars)?.neg()),
            ExprKind::Bin(op, a, b) => {
                let ja = a.eval_jet(vars)?;
                let jb = b.eval_jet(vars)?;
                let r = match op {
                    BinOp::Add => ja.try_add(&jb),
                    BinOp::Sub => ja.try_sub(&jb),
                    BinOp::Mul => ja.try_mul(&jb),
                    BinOp::Div => ja.try_div(&jb),
                };
                r.map_err(|e| jet_err(self.offset, e))
            }
            ExprKind::Pow(base, p) => {
                let jb = base.eval_jet(vars)?;
                let rounded = p.round();
                if (p - rounded).abs() < 1e-12 && rounded.abs() <= 32.0 {
                    jb.powi(rounded as i32).map_err(|e| jet_err(self.offset, e))
                } else {
                    jb.try_powf(*p).map_err(|e| jet_err(self.offset, e))
                }
            }
            ExprKind::Call(f, arg) => {
                let ja = arg.eval_jet(vars)?;
                let r = match f {
                    Func::Sqrt => ja.try_sqrt().map_err(|e| jet_err(self.offset, e))?,
                    Func::Exp => ja.exp(),
                    Func::Sin => ja.sin(),
                    Func::Cos => ja.cos(),
                };
                Ok(r)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct SpannedTok {
    tok: Tok,
    offset: usize,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<SpannedTok>, ParseError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let (offset, tline, tcol) = (i, line, col);
        let step = |i: &mut usize, col: &mut usize, k: usize| {
            *i += k;
            *col += k;
        };
        match c {
            ' ' | '\t' | '\r' => step(&mut i, &mut col, 1),
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '+' => {
                out.push(SpannedTok { tok: Tok::Plus, offset, line: tline, col: tcol });
                step(&mut i, &mut col, 1);
            }
            '-' => {
                out.push(SpannedTok { tok: Tok::Minus, offset, line: tline, col: tcol });
                step(&mut i, &mut col, 1);
            }
            '*' => {
                out.push(SpannedTok { tok: Tok::Star, offset, line: tline, col: tcol });
                step(&mut i, &mut col, 1);
            }
            '/' => {
                out.push(SpannedTok { tok: Tok::Slash, offset, line: tline, col: tcol });
                step(&mut i, &mut col, 1);
            }
            '^' => {
                out.push(SpannedTok { tok: Tok::Caret, offset, line: tline, col: tcol });
                step(&mut i, &mut col, 1);
            }
            '(' => {
                out.push(SpannedTok { tok: Tok::LParen, offset, line: tline, col: tcol });
                step(&mut i, &mut col, 1);
            }
            ')' => {
                out.push(SpannedTok { tok: Tok::RParen, offset, line: tline, col: tcol });
                step(&mut i, &mut col, 1);
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Exponent part: e/E [+-] digits.
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| ParseError {
                    line: tline,
                    col: tcol,
                    msg: format!("malformed number `{s}`"),
                })?;
                col += i - start;
                out.push(SpannedTok { tok: Tok::Num(v), offset, line: tline, col: tcol });
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                col += i - start;
                out.push(SpannedTok {
                    tok: Tok::Ident(text[start..i].to_string()),
                    offset,
                    line: tline,
                    col: tcol,
                });
            }
            other => {
                return Err(ParseError {
                    line: tline,
                    col: tcol,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pratt parser

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&SpannedTok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<SpannedTok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, msg: String) -> ParseError {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some(t) => ParseError { line: t.line, col: t.col, msg },
            None => ParseError { line: 1, col: 1, msg },
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.next() {
            Some(SpannedTok { tok: Tok::RParen, .. }) => Ok(()),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.error_at("expected `)`".into()))
            }
        }
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let t = self
            .next()
            .ok_or_else(|| self.error_at("unexpected end of expression".into()))?;
        match t.tok {
            Tok::Num(v) => Ok(Expr { kind: ExprKind::Num(v), offset: t.offset }),
            Tok::Minus => {
                let inner = self.parse_bp(30)?;
                Ok(Expr {
                    kind: ExprKind::Neg(Box::new(inner)),
                    offset: t.offset,
                })
            }
            Tok::LParen => {
                let inner = self.parse_bp(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "sqrt" => Some(Func::Sqrt),
                    "exp" => Some(Func::Exp),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    _ => None,
                };
                if let Some(f) = func {
                    match self.next() {
                        Some(SpannedTok { tok: Tok::LParen, .. }) => {}
                        _ => {
                            self.pos = self.pos.saturating_sub(1);
                            return Err(ParseError {
                                line: t.line,
                                col: t.col,
                                msg: format!("function `{name}` requires parenthesized argument"),
                            });
                        }
                    }
                    let arg = self.parse_bp(0)?;
                    self.expect_rparen()?;
                    return Ok(Expr {
                        kind: ExprKind::Call(f, Box::new(arg)),
                        offset: t.offset,
                    });
                }
                if let Some(rest) = name.strip_prefix('x') {
                    if let Ok(k) = rest.parse::<usize>() {
                        if (1..=4).contains(&k) {
                            return Ok(Expr {
                                kind: ExprKind::Var(k - 1),
                                offset: t.offset,
                            });
                        }
                    }
                }
                Err(ParseError {
                    line: t.line,
                    col: t.col,
                    msg: format!("unknown identifier `{name}` (expected x1..x4 or sqrt/exp/sin/cos)"),
                })
            }
            other => Err(ParseError {
                line: t.line,
                col: t.col,
                msg: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn parse_bp(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_primary()?;
        loop {
            let (op, l_bp, r_bp) = match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => (Some(BinOp::Add), 10, 11),
                Some(Tok::Minus) => (Some(BinOp::Sub), 10, 11),
                Some(Tok::Star) => (Some(BinOp::Mul), 20, 21),
                Some(Tok::Slash) => (Some(BinOp::Div), 20, 21),
                Some(Tok::Caret) => (None, 40, 39),
                _ => break,
            };
            if l_bp < min_bp {
                break;
            }
            let tok = self.next().unwrap();
            let rhs = self.parse_bp(r_bp)?;
            lhs = match op {
                Some(binop) => Expr {
                    offset: lhs.offset,
                    kind: ExprKind::Bin(binop, Box::new(lhs), Box::new(rhs)),
                },
                None => {
                    // Exponentiation: the right side must fold to a literal.
                    let p = match &rhs.kind {
                        ExprKind::Num(v) => *v,
                        ExprKind::Neg(inner) => match &inner.kind {
                            ExprKind::Num(v) => -v,
                            _ => {
                                return Err(ParseError {
                                    line: tok.line,
                                    col: tok.col,
                                    msg: "exponent must be a real literal".into(),
                                })
                            }
                        },
                        _ => {
                            return Err(ParseError {
                                line: tok.line,
                                col: tok.col,
                                msg: "exponent must be a real literal".into(),
                            })
                        }
                    };
                    Expr {
                        offset: lhs.offset,
                        kind: ExprKind::Pow(Box::new(lhs), p),
                    }
                }
            };
        }
        Ok(lhs)
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError { line: 1, col: 1, msg: "empty expression".into() });
    }
    let mut p = Parser { toks, pos: 0 };
    let e = p.parse_bp(0)?;
    if p.pos != p.toks.len() {
        return Err(p.error_at("trailing input after expression".into()));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Printer (canonical form; parse(print(e)) reproduces the tree)

fn prec(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Num(_) | ExprKind::Var(_) | ExprKind::Call(..) => 100,
        ExprKind::Pow(..) => 40,
        ExprKind::Neg(_) => 30,
        ExprKind::Bin(BinOp::Mul | BinOp::Div, ..) => 20,
        ExprKind::Bin(BinOp::Add | BinOp::Sub, ..) => 10,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min: u8) -> fmt::Result {
    if prec(&child.kind) < min {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => write!(f, "{v}"),
            ExprKind::Var(i) => write!(f, "x{}", i + 1),
            ExprKind::Neg(e) => {
                write!(f, "-")?;
                write_child(f, e, 31)
            }
            ExprKind::Bin(op, a, b) => {
                // Left-associative operators need parentheses around a
                // right child of equal precedence to keep the tree shape.
                let (sym, lp, rp) = match op {
                    BinOp::Add => ("+", 10, 11),
                    BinOp::Sub => ("-", 10, 11),
                    BinOp::Mul => ("*", 20, 21),
                    BinOp::Div => ("/", 20, 21),
                };
                write_child(f, a, lp)?;
                write!(f, "{sym}")?;
                write_child(f, b, rp)
            }
            ExprKind::Pow(base, p) => {
                write_child(f, base, 41)?;
                if *p < 0.0 {
                    write!(f, "^(-{})", -p)
                } else {
                    write!(f, "^{p}")
                }
            }
            ExprKind::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Jet, JetShape};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ev(text: &str, x: &[f64]) -> f64 {
        let e = parse(text).unwrap();
        let shape = JetShape::new(0, 0, 0).unwrap();
        let vars: Vec<Jet> = x.iter().map(|&v| Jet::constant(shape, v)).collect();
        e.eval_jet(&vars).unwrap().value()
    }

    fn grad(text: &str, x: &[f64]) -> Vec<f64> {
        let e = parse(text).unwrap();
        let shape = JetShape::new(0, 0, 1).unwrap();
        (0..x.len())
            .map(|d| {
                let vars: Vec<Jet> = x
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        Jet::base_linear(shape, v, if i == d { 1.0 } else { 0.0 }).unwrap()
                    })
                    .collect();
                e.eval_jet(&vars).unwrap().extract(&[], 1).unwrap()
            })
            .collect()
    }

    #[test]
    fn caret_binds_tighter_than_division() {
        let e = parse("4/(1+x1^2+x2^2+x3^2)^2").unwrap();
        assert!(matches!(
            e.kind,
            ExprKind::Bin(BinOp::Div, _, ref rhs) if matches!(rhs.kind, ExprKind::Pow(..))
        ));
        let v = ev("4/(1+x1^2+x2^2+x3^2)^2", &[0.0, 0.0, 0.0]);
        assert_relative_eq!(v, 4.0);
    }

    #[test]
    fn function_application_nodes() {
        let e = parse("sin(x1)*cos(x2)").unwrap();
        match e.kind {
            ExprKind::Bin(BinOp::Mul, a, b) => {
                assert!(matches!(a.kind, ExprKind::Call(Func::Sin, _)));
                assert!(matches!(b.kind, ExprKind::Call(Func::Cos, _)));
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn unary_minus_under_product() {
        let e = parse("2*-x1").unwrap();
        match e.kind {
            ExprKind::Bin(BinOp::Mul, _, rhs) => {
                assert!(matches!(rhs.kind, ExprKind::Neg(_)))
            }
            other => panic!("unexpected tree {other:?}"),
        }
        assert_relative_eq!(ev("2*-x1", &[3.0]), -6.0);
    }

    #[test]
    fn unary_minus_looser_than_caret() {
        assert_relative_eq!(ev("-x1^2", &[3.0]), -9.0);
    }

    #[test]
    fn product_derivative() {
        let g = grad("x1*x2", &[2.0, 5.0]);
        assert_relative_eq!(g[0], 5.0);
        assert_relative_eq!(g[1], 2.0);
    }

    #[test]
    fn sqrt_value_and_derivative() {
        assert_relative_eq!(ev("sqrt(x1)", &[4.0]), 2.0);
        let g = grad("sqrt(x1)", &[4.0]);
        assert_relative_eq!(g[0], 0.25);
    }

    #[test]
    fn error_positions() {
        let err = parse("x1 + ").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse("foo(x1)").unwrap_err();
        assert!(err.msg.contains("unknown identifier"));
        let err = parse("x1 ^ x2").unwrap_err();
        assert!(err.msg.contains("exponent"));
        let err = parse("x1 @ 2").unwrap_err();
        assert_eq!(err.col, 4);
    }

    #[test]
    fn negative_exponent_round_trips() {
        let e = parse("x1^(-2)").unwrap();
        assert!(matches!(e.kind, ExprKind::Pow(_, p) if p == -2.0));
        let printed = e.to_string();
        assert_eq!(parse(&printed).unwrap(), e);
        assert_relative_eq!(ev("x1^(-2)", &[2.0]), 0.25);
    }

    const CORPUS: &[&str] = &[
        "1",
        "0.5",
        "x1",
        "x1+x2",
        "x1-x2-x3",
        "x1*x2*x3",
        "x1/x2/x3",
        "x1^2",
        "x1^0.5",
        "x1^(-1)",
        "-x1",
        "--x1",
        "2*-x1",
        "-x1^2",
        "(x1+x2)^2",
        "x1^2+x2^2",
        "4/(1+x1^2+x2^2+x3^2)^2",
        "sqrt(x1)",
        "sqrt(1+x1^2)",
        "exp(x1)",
        "exp(-x1^2)",
        "sin(x1)*cos(x2)",
        "sin(x1*x2)",
        "cos(x1)+sin(x2)",
        "x1*(x2+x3)",
        "(x1+x2)*(x1-x2)",
        "1/(1+x1)",
        "x1/(x2+1)",
        "2.5*x1^3-1.5*x2",
        "1e-3*x1",
        "1.5e2",
        "sqrt(x1^2+x2^2)",
        "x1^2*x2^3",
        "exp(sin(x1))",
        "sqrt(sqrt(x1))",
        "x1-x2+x3-x1",
        "0.1+0.2*x1+0.3*x1^2",
        "cos(1.5707963)",
        "x1/x2*x3",
        "(x1/x2)^2",
        "3-(x2-x1)",
        "2*(1+x1^2-x2^2-x3^2)/(1+x1^2+x2^2+x3^2)^2",
        "4*(x1*x2-x3)/(1+x1^2+x2^2+x3^2)^2",
        "sin(x1)^2+cos(x1)^2",
        "x2^2/(1+x1^2)",
        "exp(x1+x2)",
        "sqrt(2)*x1",
        "1/sqrt(1+x1^2)",
        "x1^6",
        "(1-x1)^(-1)",
    ];

    #[test]
    fn round_trip_idempotence_on_corpus() {
        assert!(CORPUS.len() >= 50);
        for text in CORPUS {
            let first = parse(text).unwrap();
            let printed = first.to_string();
            let second = parse(&printed).unwrap();
            assert_eq!(first, second, "round trip failed for `{text}` -> `{printed}`");
            assert_eq!(second.to_string(), printed);
        }
    }

    #[test]
    fn corpus_finite_difference_derivatives() {
        let x = [0.7, -0.4, 0.9];
        for text in CORPUS {
            let e = parse(text).unwrap();
            if e.max_var().is_none() {
                continue;
            }
            let g = grad(text, &x);
            for d in 0..3 {
                let h = 1e-6;
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fd = (ev(text, &xp) - ev(text, &xm)) / (2.0 * h);
                let scale = 1.0 + fd.abs().max(g[d].abs());
                assert!(
                    (g[d] - fd).abs() / scale < 1e-7,
                    "derivative mismatch for `{text}` axis {d}: jet {} vs fd {fd}",
                    g[d]
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn print_parse_never_changes_tree(idx in 0usize..50, scale in 0.1f64..10.0) {
            // Mutate the corpus by scaling one literal to vary numerals.
            let text = format!("{scale}*({})", CORPUS[idx % CORPUS.len()]);
            let first = parse(&text).unwrap();
            let printed = first.to_string();
            let second = parse(&printed).unwrap();
            prop_assert_eq!(first, second);
        }
    }
}
