//! Arithmetic expressions over `x1, x2, x3, t` used for user-defined
//! sources, initial data, boundary data and exact solutions.
//!
//! Precedence, tightest first: `^` (right associative), unary `-`, `* /`,
//! `+ -`. So `-2^2 == -4` and `2^3^2 == 512`. Functions: `exp`, `sqrt`,
//! `abs`, `sign`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("function `{name}` at {pos} takes {expected} argument(s), got {got}")]
    Arity { pos: usize, name: String, expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    X1,
    X2,
    X3,
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Exp,
    Sqrt,
    Abs,
    Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    root: Node,
    text: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(s: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' | '-' | '*' | '/' | '^' => {
                out.push((i, Tok::Op(c)));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            ',' => {
                out.push((i, Tok::Comma));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &s[start..i];
                let v = lit
                    .parse::<f64>()
                    .map_err(|_| ExprError::Syntax { pos: start, msg: format!("bad number `{lit}`") })?;
                out.push((start, Tok::Num(v)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(s[start..i].to_string())));
            }
            other => {
                return Err(ExprError::Syntax { pos: i, msg: format!("unexpected character `{other}`") });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            // the exponent may carry its own sign; recursion gives right associativity
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let pos = self.here();
        let tok = self
            .toks
            .get(self.pos)
            .map(|(_, t)| t.clone())
            .ok_or(ExprError::Syntax { pos, msg: "unexpected end of input".into() })?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(Tok::LParen) = self.peek() {
                    let func = match name.as_str() {
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "sign" => Func::Sign,
                        _ => return Err(ExprError::UnknownIdentifier { pos, name }),
                    };
                    self.pos += 1;
                    let mut args = Vec::new();
                    if let Some(Tok::RParen) = self.peek() {
                        self.pos += 1;
                    } else {
                        loop {
                            args.push(self.expr()?);
                            match self.peek() {
                                Some(Tok::Comma) => self.pos += 1,
                                _ => break,
                            }
                        }
                        self.expect_rparen()?;
                    }
                    if args.len() != 1 {
                        return Err(ExprError::Arity { pos, name, expected: 1, got: args.len() });
                    }
                    return Ok(Node::Call(func, Box::new(args.pop().unwrap())));
                }
                let var = match name.as_str() {
                    "x1" => Var::X1,
                    "x2" => Var::X2,
                    "x3" => Var::X3,
                    "t" => Var::T,
                    _ => return Err(ExprError::UnknownIdentifier { pos, name }),
                };
                Ok(Node::Var(var))
            }
            other => Err(ExprError::Syntax { pos, msg: format!("unexpected token {other:?}") }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ExprError::Syntax { pos: self.here(), msg: "expected `)`".into() }),
        }
    }
}

fn eval_node(n: &Node, x: &Point, t: f64) -> Result<f64, ExprError> {
    Ok(match n {
        Node::Num(v) => *v,
        Node::Var(Var::X1) => x[0],
        Node::Var(Var::X2) => x[1],
        Node::Var(Var::X3) => x[2],
        Node::Var(Var::T) => t,
        Node::Neg(a) => -eval_node(a, x, t)?,
        Node::Bin(op, a, b) => {
            let (a, b) = (eval_node(a, x, t)?, eval_node(b, x, t)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(ExprError::Domain("division by zero".into()));
                    }
                    a / b
                }
                BinOp::Pow => {
                    let r = a.powf(b);
                    if r.is_nan() {
                        return Err(ExprError::Domain(format!("{a}^{b} is undefined")));
                    }
                    r
                }
            }
        }
        Node::Call(f, a) => {
            let a = eval_node(a, x, t)?;
            match f {
                Func::Exp => a.exp(),
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(ExprError::Domain(format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
                Func::Sign => {
                    if a > 0.0 {
                        1.0
                    } else if a < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
            }
        }
    })
}

impl Expression {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let toks = tokenize(text)?;
        if toks.is_empty() {
            return Err(ExprError::Syntax { pos: 0, msg: "empty expression".into() });
        }
        let mut p = Parser { toks: &toks, pos: 0, end: text.len() };
        let root = p.expr()?;
        if p.pos != toks.len() {
            return Err(ExprError::Syntax { pos: p.here(), msg: "unexpected trailing input".into() });
        }
        Ok(Expression { root, text: text.to_string() })
    }

    pub fn eval(&self, x: &Point, t: f64) -> Result<f64, ExprError> {
        eval_node(&self.root, x, t)
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl FromStr for Expression {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> f64 {
        Expression::parse(s).unwrap().eval(&Point::new(1.0, 1.0, 1.0), 0.0).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("2^-1"), 0.5);
        assert_eq!(ev("1+2*3"), 7.0);
        assert_eq!(ev("(1+2)*3"), 9.0);
        assert_eq!(ev("8/4/2"), 1.0);
        assert_eq!(ev("10-4-3"), 3.0);
        assert_eq!(ev("-x1*-2"), 2.0);
        assert_eq!(ev("1.5e1 + 2E-1"), 15.2);
    }

    #[test]
    fn exact_solution_strings() {
        assert_eq!(ev("exp(x1+x2+x3-t-3)"), 1.0);
        let e = Expression::parse("(1-exp(40*(x1-0.8*t-0.2)))^2").unwrap();
        assert_eq!(e.eval(&Point::new(0.2, 0.5, 0.5), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn functions() {
        assert_eq!(ev("sqrt(4)+abs(-3)+sign(-0.1)+sign(0)"), 4.0);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(Expression::parse(""), Err(ExprError::Syntax { .. })));
        assert_eq!(Expression::parse("1 + y"), Err(ExprError::UnknownIdentifier { pos: 4, name: "y".into() }));
        assert!(matches!(Expression::parse("exp(1, 2)"), Err(ExprError::Arity { got: 2, .. })));
        assert!(matches!(Expression::parse("(1+2"), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(matches!(Expression::parse("1 2"), Err(ExprError::Syntax { pos: 2, .. })));
        assert!(matches!(Expression::parse("3 $ 4"), Err(ExprError::Syntax { pos: 2, .. })));
        let e = Expression::parse("sqrt(x1 - 2)").unwrap();
        assert!(matches!(e.eval(&Point::zeros(), 0.0), Err(ExprError::Domain(_))));
        assert!(matches!(Expression::parse("1/x1").unwrap().eval(&Point::zeros(), 0.0), Err(ExprError::Domain(_))));
    }
}
