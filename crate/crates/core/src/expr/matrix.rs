use nalgebra::DMatrix;

use super::ast::{Expression, Node};
use super::parser::parse;
use crate::error::{Error, Result};

/// A square grid of expressions. Entry `(a, i)` is row `a`, column `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    dim: usize,
    entries: Vec<Expression>,
}

/// Value of a matrix field at a point together with its first partials.
/// `partials[k][(a, i)]` is the derivative of entry `(a, i)` along `x_{k+1}`.
#[derive(Debug, Clone)]
pub struct MatrixJet {
    pub x: Vec<f64>,
    pub value: DMatrix<f64>,
    pub partials: Vec<DMatrix<f64>>,
}

impl MatrixField {
    /// Builds a field from row-major entries.
    pub fn new(dim: usize, entries: Vec<Expression>) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Dimension(format!(
                "matrix field dimension must be positive and even, got {dim}"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} field, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|e| e.dim() != dim) {
            return Err(Error::Dimension(format!(
                "entry declared over dimension {}, field has dimension {dim}",
                e.dim()
            )));
        }
        Ok(MatrixField { dim, entries })
    }

    /// Parses a field from rows of expression source text.
    pub fn parse_rows<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("matrix field rows must form a square grid".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            for src in row {
                entries.push(parse(src.as_ref(), dim)?);
            }
        }
        MatrixField::new(dim, entries)
    }

    /// Constant field.
    pub fn constant(m: &DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim {
            return Err(Error::Dimension("constant field must be square".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for i in 0..dim {
                entries.push(Expression::constant(m[(a, i)], dim)?);
            }
        }
        MatrixField::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, a: usize, i: usize) -> &Expression {
        &self.entries[a * self.dim + i]
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        (0..self.dim)
            .map(|a| (0..self.dim).map(|i| self.entry(a, i).to_string()).collect())
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for a in 0..self.dim {
            for i in 0..self.dim {
                m[(a, i)] = self.entry(a, i).eval(x)?;
            }
        }
        Ok(m)
    }

    pub fn eval_jet(&self, x: &[f64]) -> Result<MatrixJet> {
        let n = self.dim;
        let mut value = DMatrix::zeros(n, n);
        let mut partials = vec![DMatrix::zeros(n, n); n];
        for a in 0..n {
            for i in 0..n {
                let jet = self.entry(a, i).eval_jet2(x)?;
                value[(a, i)] = jet.value();
                for (k, d) in jet.gradient().iter().enumerate() {
                    partials[k][(a, i)] = *d;
                }
            }
        }
        Ok(MatrixJet {
            x: x.to_vec(),
            value,
            partials,
        })
    }

    /// Symbolic `(Id + eps*S) * base * (Id - eps*S)` for a constant `base`.
    /// This is a conjugation exactly when `S^2 = 0`.
    pub fn conjugate_unipotent(base: &DMatrix<f64>, eps: f64, s: &MatrixField) -> Result<Self> {
        let n = s.dim;
        if base.nrows() != n || base.ncols() != n {
            return Err(Error::Dimension("base matrix does not match S".into()));
        }
        let s_node = |a: usize, b: usize| -> Option<Node> {
            let e = s.entry(a, b).root();
            (!e.is_zero()).then(|| e.clone())
        };
        // left = (Id + eps*S) * base
        let mut left: Vec<Option<Node>> = Vec::with_capacity(n * n);
        for a in 0..n {
            for c in 0..n {
                let mut acc = constant_term(base[(a, c)]);
                for b in 0..n {
                    let k = base[(b, c)];
                    if k == 0.0 {
                        continue;
                    }
                    if let Some(sab) = s_node(a, b) {
                        acc = sum(acc, scaled(eps * k, sab));
                    }
                }
                left.push(acc);
            }
        }
        // left * (Id - eps*S)
        let mut entries = Vec::with_capacity(n * n);
        for a in 0..n {
            for d in 0..n {
                let mut acc = left[a * n + d].clone();
                for c in 0..n {
                    if let (Some(l), Some(scd)) = (&left[a * n + c], s_node(c, d)) {
                        acc = sum(acc, scaled(-eps, Node::mul(l.clone(), scd)));
                    }
                }
                entries.push(Expression::new(acc.unwrap_or(Node::Const(0.0)), n)?);
            }
        }
        MatrixField::new(n, entries)
    }
}

fn constant_term(c: f64) -> Option<Node> {
    (c != 0.0).then_some(Node::Const(c))
}

fn scaled(c: f64, node: Node) -> Node {
    if c == 1.0 {
        node
    } else if c == -1.0 {
        Node::neg(node)
    } else if c < 0.0 {
        Node::neg(Node::mul(Node::Const(-c), node))
    } else {
        Node::mul(Node::Const(c), node)
    }
}

fn sum(acc: Option<Node>, term: Node) -> Option<Node> {
    Some(match acc {
        None => term,
        Some(a) => match term {
            Node::Neg(t) => Node::sub(a, *t),
            t => Node::add(a, t),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let f = MatrixField::parse_rows(&[vec!["x1", "1"], vec!["0", "x2^2"]]).unwrap();
        let m = f.eval(&[2.0, 3.0]).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 9.0]));
        let jet = f.eval_jet(&[2.0, 3.0]).unwrap();
        assert_eq!(jet.partials[0][(0, 0)], 1.0);
        assert_eq!(jet.partials[1][(1, 1)], 6.0);
        assert_eq!(jet.partials[1][(0, 0)], 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MatrixField::parse_rows(&[vec!["x1", "1"], vec!["0"]]).is_err());
        assert!(MatrixField::parse_rows(&[vec!["x1"]]).is_err());
    }

    #[test]
    fn unipotent_conjugation_matches_numeric_product() {
        let base = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0,
            ],
        );
        let s = MatrixField::parse_rows(&[
            vec!["0", "0", "x1*x2", "x3"],
            vec!["0", "0", "sin(x4)", "0"],
            vec!["0", "0", "0", "0"],
            vec!["0", "0", "0", "0"],
        ])
        .unwrap();
        let eps = 0.05;
        let field = MatrixField::conjugate_unipotent(&base, eps, &s).unwrap();
        let x = [0.3, -0.4, 0.7, 1.1];
        let sv = s.eval(&x).unwrap();
        let id = DMatrix::<f64>::identity(4, 4);
        let want = (&id + &sv * eps) * &base * (&id - &sv * eps);
        let got = field.eval(&x).unwrap();
        assert!((got - want).amax() < 1e-15);
    }
}
