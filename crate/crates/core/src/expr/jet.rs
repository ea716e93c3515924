//! Second-order forward-mode jets.
//!
//! A [`Jet2`] carries a value together with its full gradient and Hessian
//! with respect to the chart coordinates. The Hessian is stored as a packed
//! lower triangle, so it is symmetric by construction.

use nalgebra::{DMatrix, DVector};

use super::ast::{Expression, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    gradient: Vec<f64>,
    hessian: Vec<f64>,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl Jet2 {
    pub fn constant(value: f64, dim: usize) -> Self {
        Jet2 {
            value,
            gradient: vec![0.0; dim],
            hessian: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// The coordinate function `x_{index+1}` evaluated at `value`.
    pub fn variable(index: usize, value: f64, dim: usize) -> Self {
        let mut j = Jet2::constant(value, dim);
        j.gradient[index] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn gradient(&self) -> &[f64] {
        &self.gradient
    }

    pub fn gradient_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.gradient)
    }

    pub fn hessian(&self, i: usize, j: usize) -> f64 {
        self.hessian[tri(i, j)]
    }

    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.hessian(i, j))
    }

    /// Composes a scalar function with value `f0`, slope `f1` and curvature
    /// `f2` (all at `self.value`) onto this jet.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let n = self.dim();
        let g = &self.gradient;
        let mut hessian = Vec::with_capacity(self.hessian.len());
        for i in 0..n {
            for j in 0..=i {
                hessian.push(f1 * self.hessian[tri(i, j)] + f2 * g[i] * g[j]);
            }
        }
        Jet2 {
            value: f0,
            gradient: g.iter().map(|gi| f1 * gi).collect(),
            hessian,
        }
    }

    pub fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            gradient: zip(&self.gradient, &o.gradient, |a, b| a + b),
            hessian: zip(&self.hessian, &o.hessian, |a, b| a + b),
        }
    }

    pub fn sub(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - o.value,
            gradient: zip(&self.gradient, &o.gradient, |a, b| a - b),
            hessian: zip(&self.hessian, &o.hessian, |a, b| a - b),
        }
    }

    pub fn neg(&self) -> Jet2 {
        Jet2 {
            value: -self.value,
            gradient: self.gradient.iter().map(|a| -a).collect(),
            hessian: self.hessian.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        Jet2 {
            value: c * self.value,
            gradient: self.gradient.iter().map(|a| c * a).collect(),
            hessian: self.hessian.iter().map(|a| c * a).collect(),
        }
    }

    pub fn mul(&self, o: &Jet2) -> Jet2 {
        let n = self.dim();
        let (u, v) = (self.value, o.value);
        let (gu, gv) = (&self.gradient, &o.gradient);
        let mut hessian = Vec::with_capacity(self.hessian.len());
        for i in 0..n {
            for j in 0..=i {
                let k = tri(i, j);
                hessian.push(
                    u * o.hessian[k] + v * self.hessian[k] + gu[i] * gv[j] + gv[i] * gu[j],
                );
            }
        }
        Jet2 {
            value: u * v,
            gradient: zip(gu, gv, |a, b| u * b + v * a),
            hessian,
        }
    }

    /// Integer power; `None` when `k < 0` and the value is zero.
    pub fn powi(&self, k: i32) -> Option<Jet2> {
        let u = self.value;
        let (f0, f1, f2) = match k {
            0 => (1.0, 0.0, 0.0),
            1 => (u, 1.0, 0.0),
            2 => (u * u, 2.0 * u, 2.0),
            _ => {
                if k < 0 && u == 0.0 {
                    return None;
                }
                let kf = k as f64;
                (u.powi(k), kf * u.powi(k - 1), kf * (kf - 1.0) * u.powi(k - 2))
            }
        };
        Some(self.compose(f0, f1, f2))
    }

    /// Reciprocal; `None` at zero.
    pub fn recip(&self) -> Option<Jet2> {
        let u = self.value;
        if u == 0.0 {
            return None;
        }
        let r = 1.0 / u;
        Some(self.compose(r, -r * r, 2.0 * r * r * r))
    }
}

fn zip(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

fn domain(node: &Node, argument: f64, x: &[f64]) -> Error {
    Error::Domain {
        node: node.to_string(),
        argument,
        point: x.to_vec(),
    }
}

fn jet_node(node: &Node, x: &[f64]) -> Result<Jet2> {
    let dim = x.len();
    let out = match node {
        Node::Const(c) => Jet2::constant(*c, dim),
        Node::Var(i) => Jet2::variable(*i, x[*i], dim),
        Node::Neg(a) => jet_node(a, x)?.neg(),
        Node::Add(a, b) => jet_node(a, x)?.add(&jet_node(b, x)?),
        Node::Sub(a, b) => jet_node(a, x)?.sub(&jet_node(b, x)?),
        Node::Mul(a, b) => jet_node(a, x)?.mul(&jet_node(b, x)?),
        Node::Div(a, b) => {
            let den = jet_node(b, x)?;
            let inv = den.recip().ok_or_else(|| domain(node, den.value, x))?;
            jet_node(a, x)?.mul(&inv)
        }
        Node::Pow(a, k) => {
            let base = jet_node(a, x)?;
            base.powi(*k).ok_or_else(|| domain(node, base.value, x))?
        }
        Node::Call(func, a) => {
            let arg = jet_node(a, x)?;
            let (f0, f1, f2) = func
                .taylor(arg.value)
                .ok_or_else(|| domain(node, arg.value, x))?;
            arg.compose(f0, f1, f2)
        }
    };
    if !out.value.is_finite() {
        return Err(domain(node, out.value, x));
    }
    Ok(out)
}

fn eval_node(node: &Node, x: &[f64]) -> Result<f64> {
    let v = match node {
        Node::Const(c) => *c,
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Add(a, b) => eval_node(a, x)? + eval_node(b, x)?,
        Node::Sub(a, b) => eval_node(a, x)? - eval_node(b, x)?,
        Node::Mul(a, b) => eval_node(a, x)? * eval_node(b, x)?,
        Node::Div(a, b) => {
            let den = eval_node(b, x)?;
            if den == 0.0 {
                return Err(domain(node, den, x));
            }
            eval_node(a, x)? / den
        }
        Node::Pow(a, k) => {
            let base = eval_node(a, x)?;
            if *k < 0 && base == 0.0 {
                return Err(domain(node, base, x));
            }
            base.powi(*k)
        }
        Node::Call(func, a) => {
            let arg = eval_node(a, x)?;
            func.apply(arg).ok_or_else(|| domain(node, arg, x))?
        }
    };
    if !v.is_finite() {
        return Err(domain(node, v, x));
    }
    Ok(v)
}

impl Expression {
    /// Plain value at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        eval_node(self.root(), x)
    }

    /// Value, gradient and Hessian at `x`.
    pub fn eval_jet2(&self, x: &[f64]) -> Result<Jet2> {
        self.check_point(x)?;
        jet_node(self.root(), x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn circle_jet() {
        let f = parse("x1^2 + x2^2 - 1", 2).unwrap();
        let j = f.eval_jet2(&[1.0, 0.0]).unwrap();
        assert_eq!(j.value(), 0.0);
        assert_eq!(j.gradient(), &[2.0, 0.0]);
        assert_eq!(j.hessian_matrix(), DMatrix::identity(2, 2) * 2.0);
    }

    #[test]
    fn sin_jet_at_origin() {
        let f = parse("sin(x1)", 2).unwrap();
        let j = f.eval_jet2(&[0.0, 0.0]).unwrap();
        assert_eq!(j.value(), 0.0);
        assert_eq!(j.gradient(), &[1.0, 0.0]);
        assert_eq!(j.hessian_matrix(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn domain_errors() {
        let f = parse("ln(x1)", 2).unwrap();
        assert!(matches!(f.eval_jet2(&[0.0, 1.0]), Err(Error::Domain { .. })));
        assert!(matches!(f.eval(&[-1.0, 1.0]), Err(Error::Domain { .. })));
        let f = parse("1/(x1 - x2)", 2).unwrap();
        match f.eval_jet2(&[0.5, 0.5]) {
            Err(Error::Domain { node, point, .. }) => {
                assert_eq!(node, "1/(x1 - x2)");
                assert_eq!(point, vec![0.5, 0.5]);
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = parse("x1^-1", 2).unwrap();
        assert!(f.eval_jet2(&[0.0, 0.0]).is_err());
        let f = parse("sqrt(x2)", 2).unwrap();
        assert!(f.eval_jet2(&[0.0, 0.0]).is_err());
        assert!(f.eval(&[0.0]).is_err());
    }

    #[test]
    fn powers_at_zero_are_finite() {
        let f = parse("x1^3 + x1^1 + x1^0", 2).unwrap();
        let j = f.eval_jet2(&[0.0, 0.0]).unwrap();
        assert_eq!(j.value(), 1.0);
        assert_eq!(j.gradient(), &[1.0, 0.0]);
        assert_eq!(j.hessian(0, 0), 0.0);
    }

    #[test]
    fn plain_eval_matches_jet_value() {
        let f = parse("exp(x1)*cos(x2)/(1 + x1^2) - sqrt(x2^2 + 1)", 2).unwrap();
        for x in [[0.3, -0.7], [1.2, 2.0], [-2.0, 0.1]] {
            let v = f.eval(&x).unwrap();
            let j = f.eval_jet2(&x).unwrap();
            assert!((v - j.value()).abs() <= 1e-15 * v.abs().max(1.0));
        }
    }
}
