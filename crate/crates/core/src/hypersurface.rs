//! Real hypersurfaces `{rho = 0}`, their invariant distribution and Levi forms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::acs::{AlmostComplexStructure, NijenhuisComponents};
use crate::error::{Error, Result};
use crate::expr::{Expression, Jet2, MatrixJet, Node};
use crate::linalg::{self, columns_to_matrix};

/// Default eigenvalue tolerance, relative to the Levi form's scale.
pub const TOL_EIG: f64 = 1e-7;
/// Default lower bound on `|grad rho|` at accepted points.
pub const GRADIENT_FLOOR: f64 = 1e-3;
/// Tolerance used to decide membership in the invariant distribution.
pub const TOL_DISTRIBUTION: f64 = 1e-9;
/// Nijenhuis norm above which the contact check is only informational.
pub const TOL_INTEGRABLE: f64 = 1e-9;

const MAX_NEWTON_STEPS: usize = 50;

#[derive(Debug, Clone)]
pub struct Hypersurface {
    rho: Expression,
    gradient_floor: f64,
}

impl Hypersurface {
    pub fn new(rho: Expression, gradient_floor: f64) -> Self {
        Hypersurface {
            rho,
            gradient_floor,
        }
    }

    pub fn rho(&self) -> &Expression {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn gradient_floor(&self) -> f64 {
        self.gradient_floor
    }

    /// The same hypersurface defined by `c * rho`.
    pub fn rescaled(&self, c: f64) -> Result<Hypersurface> {
        let root = self.rho.root().clone();
        let scaled = if c < 0.0 {
            Node::neg(Node::mul(Node::Const(-c), root))
        } else {
            Node::mul(Node::Const(c), root)
        };
        Ok(Hypersurface::new(
            Expression::new(scaled, self.dim())?,
            self.gradient_floor,
        ))
    }

    fn gradient_ok(&self, g: &[f64]) -> Result<f64> {
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < self.gradient_floor {
            return Err(Error::DegenerateGradient {
                norm,
                floor: self.gradient_floor,
            });
        }
        Ok(norm)
    }

    /// Newton iteration along `grad rho` until `|rho| <= 1e-12 (1 + |x0|)`.
    pub fn project_to_surface(&self, x0: &[f64]) -> Result<DVector<f64>> {
        let mut x = DVector::from_column_slice(x0);
        let tol = 1e-12 * (1.0 + x.norm());
        let mut residual = f64::INFINITY;
        for _ in 0..=MAX_NEWTON_STEPS {
            let jet = self.rho.eval_jet2(x.as_slice())?;
            let norm = self.gradient_ok(jet.gradient())?;
            residual = jet.value().abs();
            if residual <= tol {
                return Ok(x);
            }
            let scale = jet.value() / (norm * norm);
            for (xi, gi) in x.iter_mut().zip(jet.gradient()) {
                *xi -= scale * gi;
            }
        }
        Err(Error::NoConvergence {
            steps: MAX_NEWTON_STEPS,
            residual,
        })
    }
}

/// All first- and second-order data of `rho` and `J` needed at one point.
#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    pub x: DVector<f64>,
    pub rho: Jet2,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub structure: MatrixJet,
    /// Ambient extension `theta_i = rho_{,m} J^m_i`.
    pub theta: DVector<f64>,
    /// `dtheta_{ij} = d_i theta_j - d_j theta_i`.
    pub dtheta: DMatrix<f64>,
}

impl SurfaceGeometry {
    pub fn at(surface: &Hypersurface, acs: &AlmostComplexStructure, x: &[f64]) -> Result<Self> {
        if surface.dim() != acs.dim() {
            return Err(Error::Dimension(format!(
                "surface lives in dimension {}, structure in {}",
                surface.dim(),
                acs.dim()
            )));
        }
        let rho = surface.rho.eval_jet2(x)?;
        let structure = acs.jet_at(x)?;
        Ok(Self::from_jets(rho, structure))
    }

    pub fn from_jets(rho: Jet2, structure: MatrixJet) -> Self {
        let n = rho.dim();
        let gradient = rho.gradient_vector();
        let hessian = rho.hessian_matrix();
        let j = &structure.value;
        let theta = j.transpose() * &gradient;
        // partial[(i, jj)] = d_i theta_jj = rho_{,m i} J^m_jj + rho_{,m} J^m_{jj,i}
        let mut partial = hessian.transpose() * j;
        for i in 0..n {
            let dj = structure.partials[i].transpose() * &gradient;
            for jj in 0..n {
                partial[(i, jj)] += dj[jj];
            }
        }
        let dtheta = &partial - partial.transpose();
        SurfaceGeometry {
            x: DVector::from_column_slice(&structure.x),
            rho,
            gradient,
            hessian,
            structure,
            theta,
            dtheta,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.structure.value
    }

    pub fn nijenhuis(&self) -> NijenhuisComponents {
        NijenhuisComponents::from_jet(&self.structure)
    }

    fn membership_tol(&self, v: &DVector<f64>) -> f64 {
        TOL_DISTRIBUTION * v.norm().max(1.0) * self.gradient.norm().max(1.0)
    }

    pub fn check_in_distribution(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "vector has length {}, expected {}",
                v.len(),
                self.dim()
            )));
        }
        let drho = self.gradient.dot(v).abs();
        let theta = self.theta.dot(v).abs();
        let tol = self.membership_tol(v);
        if drho > tol || theta > tol {
            return Err(Error::NotInDistribution { drho, theta });
        }
        Ok(())
    }

    /// Tangent space of the level set and the invariant distribution inside it.
    pub fn distribution_frame(&self, gradient_floor: f64) -> Result<DistributionFrame> {
        let n = self.dim();
        let norm = self.gradient.norm();
        if norm < gradient_floor {
            return Err(Error::DegenerateGradient {
                norm,
                floor: gradient_floor,
            });
        }
        let (_, tangent) = linalg::complement(std::slice::from_ref(&self.gradient), n);
        let (rank, d) = linalg::complement(&[self.gradient.clone(), self.theta.clone()], n);
        if rank != 2 || d.len() != n - 2 {
            return Err(Error::UnexpectedDimension { rank });
        }
        Ok(DistributionFrame {
            x: self.x.clone(),
            tangent_basis: columns_to_matrix(&tangent, n),
            d_basis: columns_to_matrix(&d, n),
        })
    }

    /// `-dtheta(v, J w)` without membership checks.
    pub fn levi_bilinear(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        -v.dot(&(&self.dtheta * (self.j() * w)))
    }

    /// Levi form `L(v) = -dtheta(v, Jv)` for `v` in the invariant distribution.
    pub fn levi_form(&self, v: &DVector<f64>) -> Result<f64> {
        self.check_in_distribution(v)?;
        Ok(self.levi_bilinear(v, v))
    }

    pub fn levi_report(&self, frame: &DistributionFrame, tol_eig: f64) -> LeviReport {
        let d = &frame.d_basis;
        let k = d.ncols();
        let jd = self.j() * d;
        let bilinear = -(d.transpose() * &self.dtheta * &jd);
        let symmetric_part = (&bilinear + bilinear.transpose()) * 0.5;
        let mut eigenvalues: Vec<f64> = SymmetricEigen::new(symmetric_part.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigenvalues.sort_by(f64::total_cmp);

        let largest = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = tol_eig * largest.max(self.gradient.norm());
        let classification = LeviClass::classify(&eigenvalues, threshold);

        let restricted = d.transpose() * &self.dtheta * d;
        let contact_det = restricted.determinant();
        let contact_check = contact_det.abs() > threshold.powi(k as i32);
        let contact_informational = self.nijenhuis().max_abs() > TOL_INTEGRABLE;

        LeviReport {
            x: self.x.clone(),
            bilinear,
            symmetric_part,
            eigenvalues,
            threshold,
            classification,
            contact_det,
            contact_check,
            contact_informational,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DistributionFrame {
    pub x: DVector<f64>,
    /// `2n x (2n-1)`, orthonormal columns spanning the tangent space.
    pub tangent_basis: DMatrix<f64>,
    /// `2n x (2n-2)`, orthonormal columns spanning the invariant distribution.
    pub d_basis: DMatrix<f64>,
}

impl DistributionFrame {
    /// Largest distance of `J d_k` from `span(d)` over frame columns.
    pub fn invariance_defect(&self, j: &DMatrix<f64>) -> f64 {
        let d = &self.d_basis;
        let jd = j * d;
        let resid = &jd - d * (d.transpose() * &jd);
        resid.amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LeviClass {
    StronglyPseudoconvexPositive,
    StronglyPseudoconvexNegative,
    NonDegenerateIndefinite,
    Degenerate,
}

impl LeviClass {
    pub fn classify(eigenvalues: &[f64], threshold: f64) -> LeviClass {
        if eigenvalues.is_empty() {
            return LeviClass::Degenerate;
        }
        if eigenvalues.iter().all(|&l| l > threshold) {
            LeviClass::StronglyPseudoconvexPositive
        } else if eigenvalues.iter().all(|&l| l < -threshold) {
            LeviClass::StronglyPseudoconvexNegative
        } else if eigenvalues.iter().all(|&l| l.abs() > threshold) {
            LeviClass::NonDegenerateIndefinite
        } else {
            LeviClass::Degenerate
        }
    }

    pub fn is_strongly_pseudoconvex(self) -> bool {
        matches!(
            self,
            LeviClass::StronglyPseudoconvexPositive | LeviClass::StronglyPseudoconvexNegative
        )
    }

    pub fn flipped(self) -> LeviClass {
        match self {
            LeviClass::StronglyPseudoconvexPositive => LeviClass::StronglyPseudoconvexNegative,
            LeviClass::StronglyPseudoconvexNegative => LeviClass::StronglyPseudoconvexPositive,
            other => other,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LeviReport {
    pub x: DVector<f64>,
    /// `L(d_a, d_b) = -dtheta(d_a, J d_b)` in the distribution frame.
    pub bilinear: DMatrix<f64>,
    pub symmetric_part: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Absolute eigenvalue threshold actually applied.
    pub threshold: f64,
    pub classification: LeviClass,
    pub contact_det: f64,
    pub contact_check: bool,
    /// Set when `J` is not integrable at the point, where the contact test
    /// no longer certifies anything about the symmetric Levi form.
    pub contact_informational: bool,
}

pub fn theta_form(
    surface: &Hypersurface,
    acs: &AlmostComplexStructure,
    x: &[f64],
) -> Result<DVector<f64>> {
    Ok(SurfaceGeometry::at(surface, acs, x)?.theta)
}

pub fn invariant_distribution(
    surface: &Hypersurface,
    acs: &AlmostComplexStructure,
    x: &[f64],
) -> Result<DistributionFrame> {
    SurfaceGeometry::at(surface, acs, x)?.distribution_frame(surface.gradient_floor)
}

pub fn levi_form(
    surface: &Hypersurface,
    acs: &AlmostComplexStructure,
    x: &[f64],
    v: &DVector<f64>,
) -> Result<f64> {
    SurfaceGeometry::at(surface, acs, x)?.levi_form(v)
}

pub fn levi_report(
    surface: &Hypersurface,
    acs: &AlmostComplexStructure,
    x: &[f64],
    tol_eig: f64,
) -> Result<LeviReport> {
    let geom = SurfaceGeometry::at(surface, acs, x)?;
    let frame = geom.distribution_frame(surface.gradient_floor)?;
    Ok(geom.levi_report(&frame, tol_eig))
}
