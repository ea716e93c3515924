//! The cotangent bundle `T*M` of a chart and the lift of an almost complex
//! structure to it.
//!
//! Conventions (the "convention sheet"):
//!
//! * Chart on `T*M`: `(x^1..x^{2n}, p_1..p_{2n})`, covector `alpha = p_a dx^a`.
//! * Tangent vectors on `T*M` are `4n`-vectors `V = (V_x, V_p)`, base block
//!   first, fiber block second.
//! * A bilinear form `B` is the matrix with `B(V, W) = V^T B W`.
//! * `omega = d(p_i dx^i) = dp_i ^ dx^i`, so `omega(V, W) = V_p.W_x - V_x.W_p`
//!   and `omega = [[0, -I], [I, 0]]`.
//! * `omega^{-1} = d/dx^a (x) d/dp_a - d/dp_a (x) d/dx^a`, i.e. `[[0, I], [-I, 0]]`.
//! * The lifted structure is a linear map, `(JV)^A = JJ^A_B V^B`. Its matrix
//!   always has the block shape `[[J, 0], [C^T, J^T]]`, where `C` is the
//!   `dx^i (x) d/dp_j` correction.

use nalgebra::{DMatrix, DVector};

use crate::acs::{AlmostComplexStructure, NijenhuisComponents};
use crate::error::{Error, Result};
use crate::expr::MatrixJet;

/// A covector `alpha = p_a dx^a` at the base point `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CotangentPoint {
    pub x: DVector<f64>,
    pub p: DVector<f64>,
}

impl CotangentPoint {
    pub fn new(x: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if x.len() != p.len() || x.len() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "cotangent point needs equal even lengths, got {} and {}",
                x.len(),
                p.len()
            )));
        }
        if x.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Dimension("cotangent point has non-finite entries".into()));
        }
        Ok(CotangentPoint { x, p })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

fn check_tangent(alpha: &CotangentPoint, v: &DVector<f64>) -> Result<()> {
    if v.len() != 2 * alpha.dim() {
        return Err(Error::Dimension(format!(
            "tangent vector on T*M must have length {}, got {}",
            2 * alpha.dim(),
            v.len()
        )));
    }
    Ok(())
}

/// Base projection `pi_*` of a tangent vector on `T*M`.
pub fn project(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len() / 2;
    v.rows(0, n).clone_owned()
}

/// Tautological form: `theta_alpha(V) = alpha(pi_* V)`.
pub fn theta(alpha: &CotangentPoint, v: &DVector<f64>) -> Result<f64> {
    check_tangent(alpha, v)?;
    Ok(alpha.p.dot(&v.rows(0, alpha.dim())))
}

/// Canonical symplectic form as a `4n x 4n` matrix (`dim` is `2n`).
pub fn omega(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * dim, 2 * dim);
    for a in 0..dim {
        m[(a, dim + a)] = -1.0;
        m[(dim + a, a)] = 1.0;
    }
    m
}

/// Closed-form inverse of [`omega`].
pub fn omega_inverse(dim: usize) -> DMatrix<f64> {
    -omega(dim)
}

/// `omega(V, W) = V^T omega W`.
pub fn omega_pair(v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let n = v.len() / 2;
    v.rows(n, n).dot(&w.rows(0, n)) - v.rows(0, n).dot(&w.rows(n, n))
}

/// `omega(V, .)` as a covector.
pub fn flat(v: &DVector<f64>) -> DVector<f64> {
    omega(v.len() / 2).transpose() * v
}

/// `omega^{-1}(xi, .)` as a vector.
pub fn sharp(xi: &DVector<f64>) -> DVector<f64> {
    omega_inverse(xi.len() / 2).transpose() * xi
}

fn check_jet(jet: &MatrixJet, alpha: &CotangentPoint) -> Result<()> {
    if jet.x.len() != alpha.dim() || jet.x.iter().zip(alpha.x.iter()).any(|(a, b)| a != b) {
        return Err(Error::Dimension(
            "structure jet was evaluated at a different base point".into(),
        ));
    }
    Ok(())
}

/// `d(J^ theta)` where `J^(alpha) = alpha o J`:
/// `J^a_i (dp_a (x) dx^i - dx^i (x) dp_a) + p_a (J^a_{j,i} - J^a_{i,j}) dx^i (x) dx^j`.
pub fn jhat_pullback_omega_at(jet: &MatrixJet, alpha: &CotangentPoint) -> Result<DMatrix<f64>> {
    check_jet(jet, alpha)?;
    let n = alpha.dim();
    let j = &jet.value;
    let d = &jet.partials;
    let p = &alpha.p;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for jj in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                s += p[a] * (d[i][(a, jj)] - d[jj][(a, i)]);
            }
            m[(i, jj)] = s;
        }
    }
    for a in 0..n {
        for i in 0..n {
            m[(n + a, i)] = j[(a, i)];
            m[(i, n + a)] = -j[(a, i)];
        }
    }
    Ok(m)
}

pub fn jhat_pullback_omega(
    acs: &AlmostComplexStructure,
    alpha: &CotangentPoint,
) -> Result<DMatrix<f64>> {
    jhat_pullback_omega_at(&acs.jet_at(alpha.x.as_slice())?, alpha)
}

/// `g^J` from the Nijenhuis components: `1/2 p_a N^a_{il} J^l_j dx^i (x) dx^j`.
pub fn g_j_at(jet: &MatrixJet, alpha: &CotangentPoint) -> Result<DMatrix<f64>> {
    check_jet(jet, alpha)?;
    let n = alpha.dim();
    let nij = NijenhuisComponents::from_jet(jet);
    let j = &jet.value;
    let p = &alpha.p;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for jj in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                for l in 0..n {
                    s += p[a] * nij.get(a, i, l) * j[(l, jj)];
                }
            }
            m[(i, jj)] = 0.5 * s;
        }
    }
    Ok(m)
}

pub fn g_j(acs: &AlmostComplexStructure, alpha: &CotangentPoint) -> Result<DMatrix<f64>> {
    g_j_at(&acs.jet_at(alpha.x.as_slice())?, alpha)
}

/// `g^J` from the fully expanded form
/// `1/2 p_a {[J^m_i J^l_j - J^m_j J^l_i] J^a_{l,m} + (J^a_{i,j} - J^a_{j,i})}`.
pub fn g_j_expanded_at(jet: &MatrixJet, alpha: &CotangentPoint) -> Result<DMatrix<f64>> {
    check_jet(jet, alpha)?;
    let n = alpha.dim();
    let b = bracket_block(jet, &alpha.p);
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for jj in 0..n {
            let mut s = b[(i, jj)];
            for a in 0..n {
                s += alpha.p[a] * (jet.partials[jj][(a, i)] - jet.partials[i][(a, jj)]);
            }
            m[(i, jj)] = 0.5 * s;
        }
    }
    Ok(m)
}

/// `p_a [J^m_i J^l_j - J^m_j J^l_i] J^a_{l,m}`.
fn bracket_block(jet: &MatrixJet, p: &DVector<f64>) -> DMatrix<f64> {
    let n = p.len();
    let j = &jet.value;
    let d = &jet.partials;
    // q[(m, l)] = p_a J^a_{l,m}
    let q = DMatrix::from_fn(n, n, |m, l| (0..n).map(|a| p[a] * d[m][(a, l)]).sum::<f64>());
    let t = j.transpose() * &q * j;
    &t - t.transpose()
}

/// Lifted structure at a cotangent point, in the frame `(d/dx, d/dp)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedStructure {
    matrix: DMatrix<f64>,
}

impl LiftedStructure {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    /// `||JJ^2 + Id||_max`.
    pub fn square_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        (&self.matrix * &self.matrix + DMatrix::identity(n, n)).amax()
    }

    /// Largest entry of the base-from-fiber block, which must vanish.
    pub fn verticality_defect(&self) -> f64 {
        let n = self.matrix.nrows() / 2;
        self.matrix.view((0, n), (n, n)).amax()
    }

    /// Definitional route: `JJ V = omega^{-1}(varpi(V, .), .)` with
    /// `varpi = d(J^ theta) + g^J`.
    pub fn definitional_at(jet: &MatrixJet, alpha: &CotangentPoint) -> Result<Self> {
        let varpi = jhat_pullback_omega_at(jet, alpha)? + g_j_at(jet, alpha)?;
        let inv = omega_inverse(alpha.dim());
        // varpi(V, .) = varpi^T V, then omega^{-1}(xi, .) = inv^T xi.
        let matrix = inv.transpose() * varpi.transpose();
        Ok(LiftedStructure { matrix })
    }

    /// Coordinate route:
    /// `J^a_i dx^i (x) d/dx^a + J^a_i dp_a (x) d/dp_i
    ///  + 1/2 p_a {[J^m_i J^l_j - J^m_j J^l_i] J^a_{l,m} - (J^a_{i,j} - J^a_{j,i})} dx^i (x) d/dp_j`.
    pub fn coordinates_at(jet: &MatrixJet, alpha: &CotangentPoint) -> Result<Self> {
        check_jet(jet, alpha)?;
        let n = alpha.dim();
        let j = &jet.value;
        let b = bracket_block(jet, &alpha.p);
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for a in 0..n {
            for i in 0..n {
                m[(a, i)] = j[(a, i)];
                m[(n + i, n + a)] = j[(a, i)];
            }
        }
        for i in 0..n {
            for jj in 0..n {
                let mut s = b[(i, jj)];
                for a in 0..n {
                    s -= alpha.p[a] * (jet.partials[jj][(a, i)] - jet.partials[i][(a, jj)]);
                }
                m[(n + jj, i)] = 0.5 * s;
            }
        }
        Ok(LiftedStructure { matrix: m })
    }
}

pub fn lifted_structure_definitional(
    acs: &AlmostComplexStructure,
    alpha: &CotangentPoint,
) -> Result<LiftedStructure> {
    LiftedStructure::definitional_at(&acs.jet_at(alpha.x.as_slice())?, alpha)
}

pub fn lifted_structure_coordinates(
    acs: &AlmostComplexStructure,
    alpha: &CotangentPoint,
) -> Result<LiftedStructure> {
    LiftedStructure::coordinates_at(&acs.jet_at(alpha.x.as_slice())?, alpha)
}

/// `|omega(JJ V, W) - d(J^ theta)(V, W) - g^J(V, W)|`.
pub fn twisted_form_residual(
    lifted: &LiftedStructure,
    pullback: &DMatrix<f64>,
    g: &DMatrix<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> f64 {
    let lhs = omega_pair(&lifted.apply(v), w);
    let rhs = v.dot(&(pullback * w)) + v.dot(&(g * w));
    (lhs - rhs).abs()
}
