//! Finite-difference oracles. Everything here works from plain expression
//! evaluation and central differences, never from the jet code path, so it
//! can cross-check the exact-derivative implementations.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::expr::fd::{central_gradient, central_jacobian, gradient_step, hessian_step};
use crate::expr::{Expression, MatrixField};
use crate::lift::CotangentPoint;

fn steps(x: &[f64], rule: fn(f64) -> f64) -> Vec<f64> {
    x.iter().map(|&v| rule(v)).collect()
}

/// Lie bracket `[X, Y](x) = DY X - DX Y` of two vector fields, with the
/// Jacobians taken by central differences.
pub fn lie_bracket<X, Y>(x_field: X, y_field: Y, x: &[f64]) -> Result<DVector<f64>>
where
    X: Fn(&[f64]) -> Result<DVector<f64>>,
    Y: Fn(&[f64]) -> Result<DVector<f64>>,
{
    let h = steps(x, gradient_step);
    let dx = central_jacobian(|p| Ok(x_field(p)?.as_slice().to_vec()), x, &h)?;
    let dy = central_jacobian(|p| Ok(y_field(p)?.as_slice().to_vec()), x, &h)?;
    Ok(&dy * x_field(x)? - &dx * y_field(x)?)
}

/// `N(v, w) = [JX, JY] - [X, Y] - J([X, JY] + [JX, Y])` with the
/// constant-coefficient extensions `X = v`, `Y = w`.
pub fn nijenhuis_bracket(
    field: &MatrixField,
    x: &[f64],
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<DVector<f64>> {
    let cx = |_: &[f64]| Ok(v.clone());
    let cy = |_: &[f64]| Ok(w.clone());
    let jx = |p: &[f64]| Ok(field.eval(p)? * v);
    let jy = |p: &[f64]| Ok(field.eval(p)? * w);
    let j = field.eval(x)?;
    let t1 = lie_bracket(jx, jy, x)?;
    let t2 = lie_bracket(cx, cy, x)?;
    let t3 = lie_bracket(cx, jy, x)? + lie_bracket(jx, cy, x)?;
    Ok(t1 - t2 - j * t3)
}

/// Full tensor from [`nijenhuis_bracket`] on coordinate vectors, `[a][i][l]`.
pub fn nijenhuis_tensor(field: &MatrixField, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = field.dim();
    let mut out = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for l in (i + 1)..n {
            let ei = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
            let el = DVector::from_fn(n, |k, _| if k == l { 1.0 } else { 0.0 });
            let nv = nijenhuis_bracket(field, x, &ei, &el)?;
            for a in 0..n {
                out[a][i][l] = nv[a];
                out[a][l][i] = -nv[a];
            }
        }
    }
    Ok(out)
}

/// Ambient `theta_j(x) = rho_{,m}(x) J^m_j(x)` with the gradient of `rho`
/// taken by central differences.
pub fn theta_form(rho: &Expression, field: &MatrixField, x: &[f64]) -> Result<DVector<f64>> {
    let h = steps(x, gradient_step);
    let g = DVector::from_vec(central_gradient(|p| rho.eval(p), x, &h)?);
    Ok(field.eval(x)?.transpose() * g)
}

/// Exterior derivative of [`theta_form`] by nested central differences.
pub fn dtheta(rho: &Expression, field: &MatrixField, x: &[f64]) -> Result<DMatrix<f64>> {
    let h = steps(x, hessian_step);
    // jac[(j, i)] = d_i theta_j
    let jac = central_jacobian(|p| Ok(theta_form(rho, field, p)?.as_slice().to_vec()), x, &h)?;
    Ok(jac.transpose() - jac)
}

/// `L(v) = -dtheta(v, Jv)` from the finite-difference `dtheta`.
pub fn levi_form(
    rho: &Expression,
    field: &MatrixField,
    x: &[f64],
    v: &DVector<f64>,
) -> Result<f64> {
    let d = dtheta(rho, field, x)?;
    let j = field.eval(x)?;
    Ok(-v.dot(&(d * (j * v))))
}

/// Exterior derivative of the 1-form `J^* theta = p_a J^a_i(x) dx^i` on
/// `T*M`, by central differences in all `4n` chart coordinates.
pub fn jhat_pullback_omega(field: &MatrixField, alpha: &CotangentPoint) -> Result<DMatrix<f64>> {
    let n = alpha.dim();
    let z: Vec<f64> = alpha.x.iter().chain(alpha.p.iter()).copied().collect();
    let form = |q: &[f64]| -> Result<Vec<f64>> {
        let (xq, pq) = q.split_at(n);
        let j = field.eval(xq)?;
        let p = DVector::from_column_slice(pq);
        let mut out = (j.transpose() * p).as_slice().to_vec();
        out.extend(std::iter::repeat_n(0.0, n));
        Ok(out)
    };
    let h = steps(&z, gradient_step);
    // jac[(B, A)] = d_A beta_B
    let jac = central_jacobian(form, &z, &h)?;
    Ok(jac.transpose() - jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn bracket_of_coordinate_fields() {
        // [d/dx1, x1 d/dx2] = d/dx2
        let x = [0.3, -0.2];
        let b = lie_bracket(
            |_| Ok(DVector::from_vec(vec![1.0, 0.0])),
            |p: &[f64]| Ok(DVector::from_vec(vec![0.0, p[0]])),
            &x,
        )
        .unwrap();
        assert!((b - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-10);
    }

    #[test]
    fn sphere_levi_form_is_four() {
        let rho = parse("x1^2 + x2^2 + x3^2 + x4^2 - 1", 4).unwrap();
        let j = MatrixField::constant(&crate::acs::standard_matrix(4)).unwrap();
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let l = levi_form(&rho, &j, &[0.0, 0.0, 1.0, 0.0], &v).unwrap();
        assert!((l - 4.0).abs() < 1e-6);
    }
}
