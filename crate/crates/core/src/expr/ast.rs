use std::fmt;

use crate::error::{Error, Result};

/// Builtin unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    /// Value, first and second derivative at `u`, or `None` outside the
    /// domain where all three are finite.
    pub(crate) fn taylor(self, u: f64) -> Option<(f64, f64, f64)> {
        match self {
            Func::Sin => {
                let (s, c) = u.sin_cos();
                Some((s, c, -s))
            }
            Func::Cos => {
                let (s, c) = u.sin_cos();
                Some((c, -s, -c))
            }
            Func::Exp => {
                let e = u.exp();
                e.is_finite().then_some((e, e, e))
            }
            Func::Ln => (u > 0.0).then(|| (u.ln(), 1.0 / u, -1.0 / (u * u))),
            Func::Sqrt => (u > 0.0).then(|| {
                let s = u.sqrt();
                (s, 0.5 / s, -0.25 / (s * u))
            }),
        }
    }

    pub(crate) fn apply(self, u: f64) -> Option<f64> {
        match self {
            Func::Sin => Some(u.sin()),
            Func::Cos => Some(u.cos()),
            Func::Exp => Some(u.exp()).filter(|e| e.is_finite()),
            Func::Ln => (u > 0.0).then(|| u.ln()),
            Func::Sqrt => (u > 0.0).then(|| u.sqrt()),
        }
    }
}

/// Expression tree node. Variables are stored zero-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn add(a: Node, b: Node) -> Node {
        Node::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Node, b: Node) -> Node {
        Node::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Node, b: Node) -> Node {
        Node::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Node, b: Node) -> Node {
        Node::Div(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Node) -> Node {
        Node::Neg(Box::new(a))
    }

    pub fn pow(a: Node, k: i32) -> Node {
        Node::Pow(Box::new(a), k)
    }

    pub fn call(f: Func, a: Node) -> Node {
        Node::Call(f, Box::new(a))
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Node::Const(c) if *c == 0.0)
    }

    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Const(c) if c.is_sign_negative() => 3,
            Node::Pow(..) => 4,
            Node::Const(_) | Node::Var(_) | Node::Call(..) => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Node::Const(c) => write!(f, "{c}")?,
            Node::Var(i) => write!(f, "x{}", i + 1)?,
            Node::Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 3)?;
            }
            Node::Add(a, b) | Node::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(if matches!(self, Node::Add(..)) { " + " } else { " - " })?;
                b.fmt_at(f, 2)?;
            }
            Node::Mul(a, b) | Node::Div(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(if matches!(self, Node::Mul(..)) { "*" } else { "/" })?;
                b.fmt_at(f, 3)?;
            }
            Node::Pow(a, k) => {
                a.fmt_at(f, 5)?;
                write!(f, "^{k}")?;
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// A parsed scalar field on a chart of the given (even) dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    dim: usize,
    root: Node,
}

impl Expression {
    /// Wraps a node, checking every variable against the declared dimension.
    pub fn new(root: Node, dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Dimension(format!(
                "chart dimension must be positive and even, got {dim}"
            )));
        }
        if let Some(i) = root.max_var() {
            if i >= dim {
                return Err(Error::UnknownVariable { index: i + 1, dim });
            }
        }
        Ok(Expression { dim, root })
    }

    pub fn constant(c: f64, dim: usize) -> Result<Self> {
        Expression::new(Node::Const(c), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, expression expects {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
