//! A small closed grammar for orders `g : ℕ → ℕ`.
//!
//! ```text
//! expr := term (('+' | '-') term)*
//! term := atom (('*' | '/') atom)*
//! atom := INT | 'n' | '(' expr ')' | NAME '(' expr (',' expr)* ')'
//! ```
//!
//! `/` is floor division and `-` saturates at zero. Functions: `ceil(a/b)`,
//! `floor(a/b)`, `log` (floor of log₂, `log(0) = 0`), `clog` (ceiling), `min`
//! and `max`. Every expression is total except for division by zero.
//!
//! A table can be given instead, as `table:v0,v1,...` or `@path` to a file of
//! whitespace- or comma-separated values.

use std::fmt;
use std::path::Path;

use treelab::order::{clog2, flog2, OrderTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    N,
    Int(u64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    CeilDiv(Box<Expr>, Box<Expr>),
    Log(Box<Expr>),
    Clog(Box<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.pos + 1, self.msg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(u64),
    Name(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let mut v: u64 = 0;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                v = v
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(chars[i].1 as u64 - '0' as u64))
                    .ok_or(ExprError { pos, msg: "integer too large".into() })?;
                i += 1;
            }
            out.push((pos, Tok::Int(v)));
        } else if c.is_ascii_alphabetic() {
            let mut name = String::new();
            while i < chars.len() && chars[i].1.is_ascii_alphanumeric() {
                name.push(chars[i].1);
                i += 1;
            }
            out.push((pos, Tok::Name(name)));
        } else if "+-*/(),".contains(c) {
            out.push((pos, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ExprError { pos, msg: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { pos: self.pos(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected {c:?}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.atom()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.atom()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.atom()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ExprError> {
        self.expect('(')?;
        let mut out = vec![self.expr()?];
        while self.eat(',') {
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.at += 1;
                Ok(Expr::Int(v))
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Name(name)) => {
                self.at += 1;
                if name == "n" {
                    return Ok(Expr::N);
                }
                let mut args = self.args()?;
                let one = |args: &mut Vec<Expr>| {
                    if args.len() == 1 {
                        Ok(args.pop().expect("one argument"))
                    } else {
                        Err(ExprError { pos, msg: format!("{name} takes one argument") })
                    }
                };
                match name.as_str() {
                    "ceil" | "floor" => match one(&mut args)? {
                        Expr::Div(a, b) if name == "ceil" => Ok(Expr::CeilDiv(a, b)),
                        e @ Expr::Div(..) => Ok(e),
                        _ => Err(ExprError { pos, msg: format!("{name} expects a quotient a/b") }),
                    },
                    "log" => Ok(Expr::Log(Box::new(one(&mut args)?))),
                    "clog" => Ok(Expr::Clog(Box::new(one(&mut args)?))),
                    "min" => Ok(Expr::Min(args)),
                    "max" => Ok(Expr::Max(args)),
                    _ => Err(ExprError { pos, msg: format!("unknown function {name:?}") }),
                }
            }
            Some(Tok::Sym(c)) => self.err(format!("unexpected {c:?}")),
            None => self.err("unexpected end of expression"),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { toks: lex(src)?, at: 0, end: src.len() };
        let e = p.expr()?;
        if p.at != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, n: u64) -> Result<u64, String> {
        let div = |a: &Expr, b: &Expr| -> Result<(u64, u64), String> {
            let (a, b) = (a.eval(n)?, b.eval(n)?);
            if b == 0 {
                return Err(format!("division by zero at n = {n}"));
            }
            Ok((a, b))
        };
        let overflow = || format!("overflow at n = {n}");
        Ok(match self {
            Expr::N => n,
            Expr::Int(v) => *v,
            Expr::Add(a, b) => a.eval(n)?.checked_add(b.eval(n)?).ok_or_else(overflow)?,
            Expr::Sub(a, b) => a.eval(n)?.saturating_sub(b.eval(n)?),
            Expr::Mul(a, b) => a.eval(n)?.checked_mul(b.eval(n)?).ok_or_else(overflow)?,
            Expr::Div(a, b) => {
                let (a, b) = div(a, b)?;
                a / b
            }
            Expr::CeilDiv(a, b) => {
                let (a, b) = div(a, b)?;
                a.div_ceil(b)
            }
            Expr::Log(a) => flog2(a.eval(n)?),
            Expr::Clog(a) => clog2(a.eval(n)?),
            Expr::Min(args) => args.iter().map(|e| e.eval(n)).collect::<Result<Vec<_>, _>>()?.into_iter().min().unwrap_or(0),
            Expr::Max(args) => args.iter().map(|e| e.eval(n)).collect::<Result<Vec<_>, _>>()?.into_iter().max().unwrap_or(0),
        })
    }
}

fn parse_values(text: &str) -> Result<Vec<u64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|e| format!("bad table entry {t:?}: {e}")))
        .collect()
}

/// `g(0..len)` from an expression, `table:…` or `@file`.
pub fn order_table(spec: &str, len: usize) -> Result<OrderTable, String> {
    let values = if let Some(rest) = spec.strip_prefix("table:") {
        parse_values(rest)?
    } else if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(Path::new(path)).map_err(|e| format!("{path}: {e}"))?;
        parse_values(&text)?
    } else {
        let e = Expr::parse(spec).map_err(|e| format!("order {spec:?}: {e}"))?;
        return (0..len as u64).map(|n| e.eval(n)).collect::<Result<Vec<_>, _>>().map(OrderTable::new);
    };
    if values.len() < len {
        return Err(format!("order table has {} entries, {len} needed", values.len()));
    }
    Ok(OrderTable::new(values[..len].to_vec()))
}
