//! Recursive-descent parser for the field grammar.
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = primary [ "^" exponent ] ;
//! exponent = [ "-" ] integer ;
//! primary  = number | variable | func "(" expr ")" | "(" expr ")" ;
//! variable = "x" integer ;                  (* x1 .. x{dim} *)
//! func     = "sin" | "cos" | "exp" | "ln" | "sqrt" ;
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```

use super::ast::{Expression, Func, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Int(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Int(s) => format!("number {s}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((start, Tok::Plus)),
            b'-' => out.push((start, Tok::Minus)),
            b'*' => out.push((start, Tok::Star)),
            b'/' => out.push((start, Tok::Slash)),
            b'^' => out.push((start, Tok::Caret)),
            b'(' => out.push((start, Tok::LParen)),
            b')' => out.push((start, Tok::RParen)),
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                let mut integral = true;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    integral = false;
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        integral = false;
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let text = &src[i..j];
                if integral {
                    out.push((start, Tok::Int(text.to_string())));
                } else {
                    let v: f64 = text.parse().map_err(|_| Error::Syntax {
                        position: start,
                        expected: "a number".into(),
                        found: format!("`{text}`"),
                    })?;
                    out.push((start, Tok::Num(v)));
                }
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_alphanumeric() {
                    j += 1;
                }
                out.push((start, Tok::Ident(src[i..j].to_string())));
                i = j;
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    position: start,
                    expected: "a number, variable, function, operator or parenthesis".into(),
                    found: format!("`{ch}`"),
                });
            }
        }
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Syntax {
            position: self.offset(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        })
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Node::mul(lhs, self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Node::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let position = self.offset();
        match self.bump() {
            Tok::Int(text) => {
                let k: i32 = text.parse().map_err(|_| Error::Syntax {
                    position,
                    expected: "an exponent that fits in 32 bits".into(),
                    found: format!("`{text}`"),
                })?;
                Ok(Node::pow(base, if negative { -k } else { k }))
            }
            other => Err(Error::Syntax {
                position,
                expected: "an integer exponent".into(),
                found: other.describe(),
            }),
        }
    }

    fn primary(&mut self) -> Result<Node> {
        let position = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                if !v.is_finite() {
                    return Err(Error::Syntax {
                        position,
                        expected: "a finite number".into(),
                        found: format!("number {v}"),
                    });
                }
                Ok(Node::Const(v))
            }
            Tok::Int(text) => {
                self.bump();
                let v: f64 = text.parse().map_err(|_| Error::Syntax {
                    position,
                    expected: "a number".into(),
                    found: format!("`{text}`"),
                })?;
                Ok(Node::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.fail("`)`");
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.bump();
                    if *self.peek() != Tok::LParen {
                        return self.fail("`(` after function name");
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return self.fail("`)`");
                    }
                    self.bump();
                    return Ok(Node::call(func, arg));
                }
                let index = name
                    .strip_prefix('x')
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&i| i >= 1);
                match index {
                    Some(i) if i <= self.dim => {
                        self.bump();
                        Ok(Node::Var(i - 1))
                    }
                    Some(i) => Err(Error::UnknownVariable {
                        index: i,
                        dim: self.dim,
                    }),
                    None => self.fail("a variable x1..xN or one of sin, cos, exp, ln, sqrt"),
                }
            }
            _ => self.fail("a number, variable, function call or `(`"),
        }
    }
}

/// Parses `src` into an expression over `dim` chart coordinates `x1..x{dim}`.
pub fn parse(src: &str, dim: usize) -> Result<Expression> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::Dimension(format!(
            "chart dimension must be positive and even, got {dim}"
        )));
    }
    if src.trim().is_empty() {
        return Err(Error::Syntax {
            position: 0,
            expected: "an expression".into(),
            found: "end of input".into(),
        });
    }
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        dim,
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("an operator or end of input");
    }
    Expression::new(root, dim)
}
