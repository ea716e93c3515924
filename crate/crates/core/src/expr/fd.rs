//! Central finite differences on plain evaluation. These never touch the jet
//! code path and serve as the independent oracle for it.

use nalgebra::DMatrix;

use super::ast::Expression;
use crate::error::Result;

/// Per-coordinate step `eps^(1/3) * max(1, |x_i|)` for first derivatives.
pub fn gradient_step(xi: f64) -> f64 {
    f64::EPSILON.cbrt() * xi.abs().max(1.0)
}

/// Per-coordinate step `eps^(1/4) * max(1, |x_i|)` for second derivatives.
pub fn hessian_step(xi: f64) -> f64 {
    f64::EPSILON.powf(0.25) * xi.abs().max(1.0)
}

/// Central-difference gradient of any scalar function of the point.
pub fn central_gradient<F>(f: F, x: &[f64], steps: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for (i, &h) in steps.iter().enumerate() {
        probe[i] = x[i] + h;
        let fp = f(&probe)?;
        probe[i] = x[i] - h;
        let fm = f(&probe)?;
        probe[i] = x[i];
        out.push((fp - fm) / (2.0 * h));
    }
    Ok(out)
}

/// Central-difference Jacobian of a vector-valued function: column `k` holds
/// the partial derivative along `x_k`.
pub fn central_jacobian<F>(f: F, x: &[f64], steps: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut probe = x.to_vec();
    let mut cols = Vec::with_capacity(x.len());
    for (i, &h) in steps.iter().enumerate() {
        probe[i] = x[i] + h;
        let fp = f(&probe)?;
        probe[i] = x[i] - h;
        let fm = f(&probe)?;
        probe[i] = x[i];
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let rows = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]))
}

/// Central-difference gradient of `f` with a uniform step `h`.
pub fn fd_gradient(f: &Expression, x: &[f64], h: f64) -> Result<Vec<f64>> {
    assert!(h > 0.0, "finite-difference step must be positive");
    f.check_point(x)?;
    central_gradient(|p| f.eval(p), x, &vec![h; x.len()])
}

/// Central-difference gradient with the default per-coordinate steps.
pub fn fd_gradient_auto(f: &Expression, x: &[f64]) -> Result<Vec<f64>> {
    f.check_point(x)?;
    let steps: Vec<f64> = x.iter().map(|&xi| gradient_step(xi)).collect();
    central_gradient(|p| f.eval(p), x, &steps)
}

/// Four-point central stencil Hessian with the default per-coordinate steps.
pub fn fd_hessian(f: &Expression, x: &[f64]) -> Result<DMatrix<f64>> {
    f.check_point(x)?;
    let n = x.len();
    let steps: Vec<f64> = x.iter().map(|&xi| hessian_step(xi)).collect();
    let mut probe = x.to_vec();
    let mut at = |di: f64, dj: f64, i: usize, j: usize| -> Result<f64> {
        probe.copy_from_slice(x);
        probe[i] += di;
        probe[j] += dj;
        f.eval(&probe)
    };
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let (hi, hj) = (steps[i], steps[j]);
            let v = (at(hi, hj, i, j)? - at(hi, -hj, i, j)? - at(-hi, hj, i, j)?
                + at(-hi, -hj, i, j)?)
                / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn quadratic_gradient() {
        let f = parse("x1^2", 2).unwrap();
        let g = fd_gradient(&f, &[3.0, 0.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() <= 1e-9);
        assert!(g[1].abs() <= 1e-9);
    }

    #[test]
    fn exponential_gradient() {
        let f = parse("exp(x2)", 2).unwrap();
        let g = fd_gradient(&f, &[0.0, 1.0], 1e-5).unwrap();
        assert!(g[0].abs() <= 1e-9);
        assert!((g[1] - std::f64::consts::E).abs() <= 1e-9);
    }

    #[test]
    fn hessian_of_product() {
        let f = parse("x1*x2^2", 2).unwrap();
        let h = fd_hessian(&f, &[1.0, 2.0]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 2.0]);
        assert!((h - want).amax() < 1e-6);
    }

    #[test]
    fn propagates_domain_errors() {
        let f = parse("ln(x1)", 2).unwrap();
        assert!(fd_gradient(&f, &[1e-9, 0.0], 1e-5).is_err());
    }
}
