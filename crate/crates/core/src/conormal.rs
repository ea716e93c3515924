//! The conormal bundle of a hypersurface inside `T*M` and the numerical
//! certificates around its total reality for the lifted structure.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypersurface::{DistributionFrame, SurfaceGeometry};
use crate::lift::{omega_pair, CotangentPoint, LiftedStructure};
use crate::linalg::{self, columns_to_matrix, matrix_columns, RANK_TOL};

/// Default singular-value tolerance for counting intersection directions.
pub const TOL_ANGLE: f64 = 1e-7;
/// Smallest admissible `|lambda|`; the zero section is excluded.
pub const LAMBDA_MIN: f64 = 1e-6;

/// A nonzero conormal covector `lambda * drho` at a surface point.
#[derive(Debug, Clone)]
pub struct ConormalPoint {
    pub x: DVector<f64>,
    pub lambda: f64,
    pub alpha: CotangentPoint,
}

impl ConormalPoint {
    pub fn new(geom: &SurfaceGeometry, lambda: f64, lambda_min: f64) -> Result<Self> {
        if !(lambda.abs() >= lambda_min) || !lambda.is_finite() {
            return Err(Error::ZeroSection {
                lambda,
                min: lambda_min,
            });
        }
        let alpha = CotangentPoint::new(geom.x.clone(), &geom.gradient * lambda)?;
        Ok(ConormalPoint {
            x: geom.x.clone(),
            lambda,
            alpha,
        })
    }

    /// `max |alpha(u)|` over the tangent frame columns.
    pub fn annihilation_residual(&self, frame: &DistributionFrame) -> f64 {
        (frame.tangent_basis.transpose() * &self.alpha.p).amax()
    }
}

/// Orthonormal basis of `T_alpha N*(Gamma)` as the columns of a `4n x 2n` matrix.
#[derive(Debug, Clone)]
pub struct ConormalTangentBasis {
    pub b: DMatrix<f64>,
}

fn lift_column(base: &DVector<f64>, fiber: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(base.len() * 2, base.iter().chain(fiber.iter()).copied())
}

/// Unnormalized spanning set: `(u, lambda Hess(rho) u)` per tangent vector
/// `u`, followed by the fiber direction `(0, grad rho)`.
pub fn conormal_spanning_set(
    geom: &SurfaceGeometry,
    frame: &DistributionFrame,
    cp: &ConormalPoint,
) -> Vec<DVector<f64>> {
    let n = geom.dim();
    let mut cols: Vec<DVector<f64>> = frame
        .tangent_basis
        .column_iter()
        .map(|u| {
            let u = u.clone_owned();
            let fiber = &geom.hessian * &u * cp.lambda;
            lift_column(&u, &fiber)
        })
        .collect();
    cols.push(lift_column(&DVector::zeros(n), &geom.gradient));
    cols
}

pub fn conormal_tangent_basis(
    geom: &SurfaceGeometry,
    frame: &DistributionFrame,
    cp: &ConormalPoint,
) -> Result<ConormalTangentBasis> {
    let n = geom.dim();
    let q = linalg::orthonormalize(&conormal_spanning_set(geom, frame, cp), RANK_TOL);
    if q.len() < n {
        return Err(Error::RankDeficient {
            rank: q.len(),
            expected: n,
        });
    }
    Ok(ConormalTangentBasis {
        b: columns_to_matrix(&q, 2 * n),
    })
}

impl ConormalTangentBasis {
    /// Largest violation of the conormal constraints over columns `(a, b)`:
    /// `drho(a) = 0` and `b - lambda Hess(rho) a` parallel to `grad rho`.
    pub fn constraint_residual(&self, geom: &SurfaceGeometry, cp: &ConormalPoint) -> f64 {
        let n = geom.dim();
        let g = &geom.gradient;
        let gn = g.norm_squared();
        let mut worst = 0.0f64;
        for col in self.b.column_iter() {
            let a = col.rows(0, n).clone_owned();
            let fiber = col.rows(n, n).clone_owned();
            let r = &fiber - &geom.hessian * &a * cp.lambda;
            let along = r.dot(g) / gn;
            let perp = &r - g * along;
            worst = worst.max(g.dot(&a).abs()).max(perp.amax());
        }
        worst
    }

    pub fn columns(&self) -> Vec<DVector<f64>> {
        matrix_columns(&self.b)
    }
}

/// `max |omega(b_i, b_j)|` over column pairs.
pub fn lagrangian_residual(basis: &DMatrix<f64>) -> f64 {
    let cols = matrix_columns(basis);
    let mut worst = 0.0f64;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            worst = worst.max(omega_pair(&cols[i], &cols[j]).abs());
        }
    }
    worst
}

/// Negative control: the first lifted tangent column gets an extra fiber
/// component equal to the second tangent direction, breaking the Lagrangian
/// condition by `omega((u0, . + u1), (u1, .)) = |u1|^2`.
pub fn corrupted_basis(
    geom: &SurfaceGeometry,
    frame: &DistributionFrame,
    cp: &ConormalPoint,
) -> DMatrix<f64> {
    let n = geom.dim();
    let mut cols = conormal_spanning_set(geom, frame, cp);
    let u1 = frame.tangent_basis.column(1).clone_owned();
    let bump = lift_column(&DVector::zeros(n), &u1);
    cols[0] += bump;
    let q = linalg::orthonormalize(&cols, RANK_TOL);
    columns_to_matrix(&q, 2 * n)
}

/// Outcome of the total-reality test at one conormal point.
#[derive(Debug, Clone)]
pub struct TotalReality {
    pub dim_intersection: usize,
    /// Smallest principal angle between `W` and `JJ W`, radians.
    pub margin: f64,
    /// Principal cosines, descending.
    pub cosines: Vec<f64>,
    /// Columns span `W cap JJ W` (original coordinates); empty when trivial.
    pub dhat_basis: DMatrix<f64>,
}

/// Compares `W = span(B)` with `JJ W`. Angles are measured after scaling the
/// fiber coordinates by `1/|lambda|`, which conjugates the lift at `lambda`
/// to the lift at `sign(lambda)` and makes the margin independent of `|lambda|`.
pub fn total_reality(
    lifted: &LiftedStructure,
    basis: &ConormalTangentBasis,
    lambda: f64,
    tol_angle: f64,
) -> TotalReality {
    let n2 = basis.b.nrows();
    let n = n2 / 2;
    let s = 1.0 / lambda.abs();
    let normalize = |m: &DMatrix<f64>| {
        let mut m = m.clone();
        m.rows_mut(n, n).scale_mut(s);
        m
    };
    let w = normalize(&basis.b);
    let jw = normalize(&(lifted.matrix() * &basis.b));
    let qw = columns_to_matrix(&linalg::orthonormalize(&matrix_columns(&w), RANK_TOL), n2);
    let qjw = columns_to_matrix(&linalg::orthonormalize(&matrix_columns(&jw), RANK_TOL), n2);

    let angles = linalg::principal_angles(&qw, &qjw);
    let dim_intersection = angles
        .cosines
        .iter()
        .filter(|&&c| c >= 1.0 - tol_angle)
        .count();

    let mut dhat = Vec::with_capacity(dim_intersection);
    for k in 0..dim_intersection {
        let mut v = &qw * angles.left.column(k);
        v.rows_mut(n, n).scale_mut(lambda.abs());
        dhat.push(v);
    }
    let dhat = linalg::orthonormalize(&dhat, RANK_TOL);

    TotalReality {
        dim_intersection,
        margin: angles.smallest,
        cosines: angles.cosines,
        dhat_basis: columns_to_matrix(&dhat, n2),
    }
}

/// Residuals for the injectivity of `pi_*` on `W cap JJ W` and for its image
/// lying in the invariant distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionCheck {
    /// No intersection: nothing to check.
    pub vacuous: bool,
    /// Smallest singular value of `pi_*` restricted to the intersection.
    pub min_base_singular: Option<f64>,
    pub injective: bool,
    pub drho_residual: f64,
    pub theta_residual: f64,
}

pub const INJECTIVITY_TOL: f64 = 1e-9;

pub fn intersection_check(geom: &SurfaceGeometry, dhat: &DMatrix<f64>) -> IntersectionCheck {
    if dhat.ncols() == 0 {
        return IntersectionCheck {
            vacuous: true,
            min_base_singular: None,
            injective: true,
            drho_residual: 0.0,
            theta_residual: 0.0,
        };
    }
    let n = geom.dim();
    let base = dhat.rows(0, n).clone_owned();
    let sv = base.clone().svd(false, false).singular_values;
    let min_base_singular = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let mut drho_residual = 0.0f64;
    let mut theta_residual = 0.0f64;
    for col in base.column_iter() {
        let unit = col.normalize();
        drho_residual = drho_residual.max(geom.gradient.dot(&unit).abs());
        theta_residual = theta_residual.max(geom.theta.dot(&unit).abs());
    }
    IntersectionCheck {
        vacuous: false,
        min_base_singular: Some(min_base_singular),
        injective: min_base_singular > INJECTIVITY_TOL,
        drho_residual,
        theta_residual,
    }
}

/// `lambda dtheta(v, w) + 1/2 alpha(N(v, Jw))` for `v, w` in the invariant
/// distribution. Equals `omega(V, JJ W)` for the conormal lifts `V, W`.
pub fn twisted_pairing(
    geom: &SurfaceGeometry,
    cp: &ConormalPoint,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<f64> {
    geom.check_in_distribution(v)?;
    geom.check_in_distribution(w)?;
    let jw = geom.j() * w;
    let nij = geom.nijenhuis().apply(v, &jw);
    let lhs = cp.lambda * v.dot(&(&geom.dtheta * w));
    Ok(lhs + 0.5 * cp.alpha.p.dot(&nij))
}

/// The tangent vector `(u, lambda Hess(rho) u)` of the conormal bundle over `u`.
pub fn conormal_lift(geom: &SurfaceGeometry, cp: &ConormalPoint, u: &DVector<f64>) -> DVector<f64> {
    lift_column(u, &(&geom.hessian * u * cp.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acs::AlmostComplexStructure;
    use crate::expr::parse;
    use crate::hypersurface::{Hypersurface, GRADIENT_FLOOR};
    use crate::lift::LiftedStructure;

    fn setup(rho: &str, x: &[f64], lambda: f64) -> (SurfaceGeometry, DistributionFrame, ConormalPoint) {
        let s = Hypersurface::new(parse(rho, 4).unwrap(), GRADIENT_FLOOR);
        let acs = AlmostComplexStructure::standard(4).unwrap();
        let geom = SurfaceGeometry::at(&s, &acs, x).unwrap();
        let frame = geom.distribution_frame(GRADIENT_FLOOR).unwrap();
        let cp = ConormalPoint::new(&geom, lambda, LAMBDA_MIN).unwrap();
        (geom, frame, cp)
    }

    fn unit(i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(4);
        v[i] = 1.0;
        v
    }

    #[test]
    fn zero_section_is_rejected() {
        let s = Hypersurface::new(parse("x4", 4).unwrap(), GRADIENT_FLOOR);
        let acs = AlmostComplexStructure::standard(4).unwrap();
        let geom = SurfaceGeometry::at(&s, &acs, &[0.0; 4]).unwrap();
        assert!(matches!(
            ConormalPoint::new(&geom, 1e-9, LAMBDA_MIN),
            Err(Error::ZeroSection { .. })
        ));
        assert!(ConormalPoint::new(&geom, f64::NAN, LAMBDA_MIN).is_err());
    }

    #[test]
    fn plane_basis_and_intersection() {
        let (geom, frame, cp) = setup("x4", &[0.2, -0.1, 0.4, 0.0], 1.0);
        assert_eq!(cp.annihilation_residual(&frame), 0.0);
        let basis = conormal_tangent_basis(&geom, &frame, &cp).unwrap();
        // span{(dx1,0),(dy1,0),(dx2,0),(0,dp_y2)}
        let b = &basis.b;
        assert_eq!(b.ncols(), 4);
        let proj = b * b.transpose();
        for k in [0usize, 1, 2, 7] {
            let mut e = DVector::zeros(8);
            e[k] = 1.0;
            assert!((&proj * &e - &e).amax() < 1e-15);
        }
        assert_eq!(lagrangian_residual(b), 0.0);

        let acs = AlmostComplexStructure::standard(4).unwrap();
        let jet = acs.jet_at(cp.x.as_slice()).unwrap();
        let lifted = LiftedStructure::coordinates_at(&jet, &cp.alpha).unwrap();
        let tr = total_reality(&lifted, &basis, cp.lambda, TOL_ANGLE);
        assert_eq!(tr.dim_intersection, 2);
        assert_eq!(tr.dhat_basis.ncols(), 2);

        let ic = intersection_check(&geom, &tr.dhat_basis);
        assert!(!ic.vacuous);
        assert!(ic.injective);
        assert!(ic.drho_residual <= 1e-12 && ic.theta_residual <= 1e-12);
        // the image is span(dx1, dy1)
        let base = tr.dhat_basis.rows(0, 4).clone_owned();
        assert!(base.rows(2, 2).amax() < 1e-12);

        let r = twisted_pairing(&geom, &cp, &unit(0), &unit(1)).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn sphere_basis_is_lifted_tangent_space() {
        let (geom, frame, cp) = setup("x1^2 + x2^2 + x3^2 + x4^2 - 1", &[0.0, 0.0, 1.0, 0.0], 1.0);
        let raw = conormal_spanning_set(&geom, &frame, &cp);
        for col in &raw[..3] {
            let u = col.rows(0, 4).clone_owned();
            let f = col.rows(4, 4).clone_owned();
            assert_eq!(f, u * 2.0);
        }
        assert_eq!(raw[3].rows(4, 4).clone_owned(), geom.gradient);
        let basis = conormal_tangent_basis(&geom, &frame, &cp).unwrap();
        assert!(basis.constraint_residual(&geom, &cp) <= 1e-12);
        assert!(lagrangian_residual(&basis.b) <= 1e-14);

        let acs = AlmostComplexStructure::standard(4).unwrap();
        let jet = acs.jet_at(cp.x.as_slice()).unwrap();
        let lifted = LiftedStructure::coordinates_at(&jet, &cp.alpha).unwrap();
        let tr = total_reality(&lifted, &basis, cp.lambda, TOL_ANGLE);
        assert_eq!(tr.dim_intersection, 0);
        assert!(tr.margin > 0.05);
        assert!(intersection_check(&geom, &tr.dhat_basis).vacuous);

        // w = Jv: |lambda| L(v) = 4
        let v = unit(0);
        let w = geom.j() * &v;
        let r = twisted_pairing(&geom, &cp, &v, &w).unwrap();
        assert!((r.abs() - 4.0).abs() <= 1e-12);
        let om = omega_pair(&conormal_lift(&geom, &cp, &v), &lifted.apply(&conormal_lift(&geom, &cp, &w)));
        assert!((om - r).abs() <= 1e-12);
    }

    #[test]
    fn corrupted_basis_breaks_lagrangian() {
        let (geom, frame, cp) = setup("x1^2 + x2^2 + x3^2 + x4^2 - 1", &[0.0, 0.0, 1.0, 0.0], 1.0);
        let bad = corrupted_basis(&geom, &frame, &cp);
        assert!(lagrangian_residual(&bad) > 0.1);
    }

    #[test]
    fn twisted_pairing_rejects_vectors_outside_distribution() {
        let (geom, _, cp) = setup("x1^2 + x2^2 + x3^2 + x4^2 - 1", &[0.0, 0.0, 1.0, 0.0], 1.0);
        assert!(matches!(
            twisted_pairing(&geom, &cp, &unit(2), &unit(0)),
            Err(Error::NotInDistribution { .. })
        ));
    }
}
