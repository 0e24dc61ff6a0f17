//! A tiny closed-form expression language for user-supplied generator
//! functions.
//!
//! The grammar knows one variable `t`, numeric literals, `+ - * / ^`
//! (with `^` right-associative and binding tighter than unary minus),
//! and the functions `ln`, `exp`, `sqrt` and `pow(a, b)`. Every term is
//! symbolically differentiable, which is what the validator and the tail
//! coefficients need.

use std::fmt;

use crate::error::{Error, Result};

/// Abstract syntax tree over the single variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// The variable `t`.
    Var,
    /// A finite numeric literal.
    Lit(f64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Ln(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
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
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token with its starting byte offset, or `None` at end of input.
    fn next(&mut self) -> Result<Option<(Tok, usize)>> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => return self.lex_number().map(Some),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii")
                    .to_string();
                return Ok(Some((Tok::Ident(name), start)));
            }
            other => {
                return Err(Error::Syntax {
                    offset: start,
                    found: format!("`{}`", other as char),
                    expected: vec!["a token".into()],
                })
            }
        };
        self.pos += 1;
        Ok(Some((tok, start)))
    }

    fn lex_number(&mut self) -> Result<(Tok, usize)> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // `e` belonged to something else ("2e" alone is not a number)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            found: format!("`{text}`"),
            expected: vec!["a number".into()],
        })?;
        Ok((Tok::Num(value), start))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.idx).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        self.idx += 1;
        t
    }

    fn err(&self, expected: &[&str]) -> Error {
        Error::Syntax {
            offset: self.offset(),
            found: self
                .peek()
                .map(|t| t.to_string())
                .unwrap_or_else(|| "end of input".into()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, want: Tok, name: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&[name]))
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    e = Expr::Add(e.into(), self.term()?.into());
                }
                Some(Tok::Minus) => {
                    self.bump();
                    e = Expr::Sub(e.into(), self.term()?.into());
                }
                _ => return Ok(e),
            }
        }
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<Expr> {
        let mut e = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    e = Expr::Mul(e.into(), self.factor()?.into());
                }
                Some(Tok::Slash) => {
                    self.bump();
                    e = Expr::Div(e.into(), self.factor()?.into());
                }
                _ => return Ok(e),
            }
        }
    }

    // factor := '-' factor | power
    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            let inner = self.factor()?;
            // fold a literal sign immediately so `-0.5` is a literal
            return Ok(match inner {
                Expr::Lit(x) => Expr::Lit(-x),
                other => Expr::Neg(other.into()),
            });
        }
        self.power()
    }

    // power := atom ('^' factor)?   (right-associative, exponent may carry
    // a leading unary minus as in `t^-0.5`)
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Pow(base.into(), exp.into()));
        }
        Ok(base)
    }

    // atom := number | 't' | fn '(' args ')' | '(' expr ')'
    fn atom(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(x)) => Ok(Expr::Lit(x)),
            Some(Tok::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::Var),
                "ln" | "exp" | "sqrt" => {
                    self.expect(Tok::LParen, "`(`")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(match name.as_str() {
                        "ln" => Expr::Ln(arg.into()),
                        "exp" => Expr::Exp(arg.into()),
                        _ => Expr::Sqrt(arg.into()),
                    })
                }
                "pow" => {
                    self.expect(Tok::LParen, "`(`")?;
                    let a = self.expr()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let b = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::Pow(a.into(), b.into()))
                }
                _ => Err(Error::UnknownIdentifier { name, offset }),
            },
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => {
                self.idx = self.idx.saturating_sub(1);
                Err(self.err(&["a number", "`t`", "`(`", "a function"]))
            }
        }
    }
}

/// Parse an expression in the single variable `t`.
pub fn parse(src: &str) -> Result<Expr> {
    let mut lexer = Lexer::new(src);
    let mut toks = Vec::new();
    while let Some(tok) = lexer.next()? {
        toks.push(tok);
    }
    if toks.is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            found: "end of input".into(),
            expected: vec!["an expression".into()],
        });
    }
    let mut parser = Parser {
        toks,
        idx: 0,
        end: src.len(),
    };
    let e = parser.expr()?;
    if parser.idx != parser.toks.len() {
        return Err(parser.err(&["end of input"]));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

impl Expr {
    /// Evaluate at `t`. IEEE semantics except where the real-valued result is
    /// undefined: `ln` of a non-positive value, `sqrt` of a negative value,
    /// `0^negative`, and negative bases raised to non-integer powers report a
    /// domain error carrying the offending subexpression.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Expr::Var => Ok(t),
            Expr::Lit(x) => Ok(*x),
            Expr::Neg(e) => Ok(-e.eval(t)?),
            Expr::Add(a, b) => Ok(a.eval(t)? + b.eval(t)?),
            Expr::Sub(a, b) => Ok(a.eval(t)? - b.eval(t)?),
            Expr::Mul(a, b) => Ok(a.eval(t)? * b.eval(t)?),
            Expr::Div(a, b) => Ok(a.eval(t)? / b.eval(t)?),
            Expr::Pow(a, b) => {
                let base = a.eval(t)?;
                let exp = b.eval(t)?;
                if base == 0.0 && exp < 0.0 {
                    return Err(self.domain_error("0 raised to a negative power"));
                }
                if base < 0.0 && exp.fract() != 0.0 {
                    return Err(self.domain_error("negative base with non-integer exponent"));
                }
                Ok(base.powf(exp))
            }
            Expr::Ln(e) => {
                let x = e.eval(t)?;
                if x <= 0.0 {
                    return Err(self.domain_error("ln of a non-positive value"));
                }
                Ok(x.ln())
            }
            Expr::Exp(e) => Ok(e.eval(t)?.exp()),
            Expr::Sqrt(e) => {
                let x = e.eval(t)?;
                if x < 0.0 {
                    return Err(self.domain_error("sqrt of a negative value"));
                }
                Ok(x.sqrt())
            }
        }
    }

    fn domain_error(&self, reason: &str) -> Error {
        Error::Domain {
            expr: self.to_string(),
            reason: reason.into(),
        }
    }

    /// Symbolic derivative with respect to `t`, lightly simplified
    /// (constant folding, x*1 / x*0 / x+0 elimination).
    pub fn differentiate(&self) -> Expr {
        let d = match self {
            Expr::Var => Expr::Lit(1.0),
            Expr::Lit(_) => Expr::Lit(0.0),
            Expr::Neg(e) => Expr::Neg(e.differentiate().into()),
            Expr::Add(a, b) => Expr::Add(a.differentiate().into(), b.differentiate().into()),
            Expr::Sub(a, b) => Expr::Sub(a.differentiate().into(), b.differentiate().into()),
            Expr::Mul(a, b) => Expr::Add(
                Expr::Mul(a.differentiate().into(), b.clone().into()).into(),
                Expr::Mul(a.clone().into(), b.differentiate().into()).into(),
            ),
            Expr::Div(a, b) => Expr::Div(
                Expr::Sub(
                    Expr::Mul(a.differentiate().into(), b.clone().into()).into(),
                    Expr::Mul(a.clone().into(), b.differentiate().into()).into(),
                )
                .into(),
                Expr::Pow(b.clone().into(), Expr::Lit(2.0).into()).into(),
            ),
            Expr::Pow(a, b) => match b.as_ref() {
                // power rule for constant exponents
                Expr::Lit(c) => Expr::Mul(
                    Expr::Mul(
                        Expr::Lit(*c).into(),
                        Expr::Pow(a.clone().into(), Expr::Lit(c - 1.0).into()).into(),
                    )
                    .into(),
                    a.differentiate().into(),
                ),
                // general a^b = exp(b ln a)
                _ => Expr::Mul(
                    Expr::Pow(a.clone().into(), b.clone().into()).into(),
                    Expr::Add(
                        Expr::Mul(b.differentiate().into(), Expr::Ln(a.clone().into()).into())
                            .into(),
                        Expr::Div(
                            Expr::Mul(b.clone().into(), a.differentiate().into()).into(),
                            a.clone().into(),
                        )
                        .into(),
                    )
                    .into(),
                ),
            },
            Expr::Ln(e) => Expr::Div(e.differentiate().into(), e.clone().into()),
            Expr::Exp(e) => Expr::Mul(e.differentiate().into(), self.clone().into()),
            Expr::Sqrt(e) => Expr::Div(
                e.differentiate().into(),
                Expr::Mul(Expr::Lit(2.0).into(), self.clone().into()).into(),
            ),
        };
        d.simplify()
    }

    /// Constant folding plus removal of multiplicative and additive units.
    pub fn simplify(&self) -> Expr {
        use Expr::*;
        let lit = |x: f64| -> Expr { Lit(x) };
        match self {
            Var | Lit(_) => self.clone(),
            Neg(e) => match e.simplify() {
                Lit(x) => lit(-x),
                Neg(inner) => *inner,
                s => Neg(s.into()),
            },
            Add(a, b) => match (a.simplify(), b.simplify()) {
                (Lit(x), Lit(y)) if (x + y).is_finite() => lit(x + y),
                (Lit(x), s) if x == 0.0 => s,
                (s, Lit(y)) if y == 0.0 => s,
                (sa, sb) => Add(sa.into(), sb.into()),
            },
            Sub(a, b) => match (a.simplify(), b.simplify()) {
                (Lit(x), Lit(y)) if (x - y).is_finite() => lit(x - y),
                (s, Lit(y)) if y == 0.0 => s,
                (Lit(x), s) if x == 0.0 => Neg(s.into()).simplify(),
                (sa, sb) => Sub(sa.into(), sb.into()),
            },
            Mul(a, b) => match (a.simplify(), b.simplify()) {
                (Lit(x), Lit(y)) if (x * y).is_finite() => lit(x * y),
                (Lit(x), _) | (_, Lit(x)) if x == 0.0 => lit(0.0),
                (Lit(x), s) if x == 1.0 => s,
                (s, Lit(y)) if y == 1.0 => s,
                (Lit(x), s) if x == -1.0 => Neg(s.into()).simplify(),
                (s, Lit(y)) if y == -1.0 => Neg(s.into()).simplify(),
                (sa, sb) => Mul(sa.into(), sb.into()),
            },
            Div(a, b) => match (a.simplify(), b.simplify()) {
                (Lit(x), Lit(y)) if y != 0.0 && (x / y).is_finite() => lit(x / y),
                (Lit(x), _) if x == 0.0 => lit(0.0),
                (s, Lit(y)) if y == 1.0 => s,
                (sa, sb) => Div(sa.into(), sb.into()),
            },
            Pow(a, b) => match (a.simplify(), b.simplify()) {
                (Lit(x), Lit(y)) if x.powf(y).is_finite() && !(x < 0.0 && y.fract() != 0.0) => {
                    lit(x.powf(y))
                }
                (s, Lit(y)) if y == 1.0 => s,
                (_, Lit(y)) if y == 0.0 => lit(1.0),
                (sa, sb) => Pow(sa.into(), sb.into()),
            },
            Ln(e) => match e.simplify() {
                Lit(x) if x > 0.0 && x.ln().is_finite() => lit(x.ln()),
                s => Ln(s.into()),
            },
            Exp(e) => match e.simplify() {
                Lit(x) if x.exp().is_finite() => lit(x.exp()),
                s => Exp(s.into()),
            },
            Sqrt(e) => match e.simplify() {
                Lit(x) if x >= 0.0 => lit(x.sqrt()),
                s => Sqrt(s.into()),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Pretty-printer
// ---------------------------------------------------------------------------

// Precedence levels used by the printer; must mirror the parser.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => PREC_ADD,
        Expr::Mul(..) | Expr::Div(..) => PREC_MUL,
        Expr::Neg(_) => PREC_NEG,
        Expr::Lit(x) if *x < 0.0 => PREC_NEG,
        Expr::Pow(..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if prec(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var => write!(f, "t"),
            Expr::Lit(x) => write!(f, "{x}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                write_child(f, e, PREC_NEG)
            }
            Expr::Add(a, b) => {
                write_child(f, a, PREC_ADD)?;
                write!(f, "+")?;
                write_child(f, b, PREC_ADD + 1)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, PREC_ADD)?;
                write!(f, "-")?;
                write_child(f, b, PREC_ADD + 1)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, PREC_MUL)?;
                write!(f, "*")?;
                write_child(f, b, PREC_MUL + 1)
            }
            Expr::Div(a, b) => {
                write_child(f, a, PREC_MUL)?;
                write!(f, "/")?;
                write_child(f, b, PREC_MUL + 1)
            }
            Expr::Pow(a, b) => {
                // base must be an atom; `(-a)^b` and `(a+b)^c` need parens,
                // and so do negative literals so they are not re-parsed as
                // unary minus applied to the whole power
                write_child(f, a, PREC_ATOM)?;
                write!(f, "^")?;
                // exponent admits unary minus: `t^-0.5`
                write_child(f, b, PREC_NEG)
            }
            Expr::Ln(e) => write!(f, "ln({e})"),
            Expr::Exp(e) => write!(f, "exp({e})"),
            Expr::Sqrt(e) => write!(f, "sqrt({e})"),
        }
    }
}
