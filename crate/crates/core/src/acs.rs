//! Almost complex structures on a chart and their Nijenhuis tensor.
//!
//! Index convention: row = upper index, column = lower index, so the matrix
//! product realizes `(Jv)^a = J^a_i v^i`. Coordinates are ordered in complex
//! pairs `(x1, y1, x2, y2, ...)`, i.e. chart variables `x1, x2` form the
//! first pair.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{MatrixField, MatrixJet};

/// Default tolerance for `||J^2 + Id||`.
pub const TOL_ACS: f64 = 1e-10;

/// The constant structure with `J e_{2k} = e_{2k+1}`, `J e_{2k+1} = -e_{2k}`.
pub fn standard_matrix(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for k in (0..dim).step_by(2) {
        j[(k + 1, k)] = 1.0;
        j[(k, k + 1)] = -1.0;
    }
    j
}

#[derive(Debug, Clone)]
pub struct AlmostComplexStructure {
    field: MatrixField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    /// Largest absolute entry of `J(x)^2 + Id`.
    pub residual: f64,
    pub ok: bool,
}

impl AlmostComplexStructure {
    pub fn new(field: MatrixField) -> Self {
        AlmostComplexStructure { field }
    }

    pub fn standard(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Dimension(format!("odd or zero dimension {dim}")));
        }
        Ok(Self::new(MatrixField::constant(&standard_matrix(dim))?))
    }

    /// `(Id + eps*S) J_std (Id - eps*S)`; a genuine conjugation of the
    /// standard structure when `S^2 = 0` (see [`nilpotency_residual`]).
    pub fn conjugated(eps: f64, s: &MatrixField) -> Result<Self> {
        let base = standard_matrix(s.dim());
        Ok(Self::new(MatrixField::conjugate_unipotent(&base, eps, s)?))
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn field(&self) -> &MatrixField {
        &self.field
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, structure has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x)?;
        self.field.eval(x)
    }

    pub fn jet_at(&self, x: &[f64]) -> Result<MatrixJet> {
        self.check(x)?;
        self.field.eval_jet(x)
    }

    pub fn validate(&self, x: &[f64], tol: f64) -> Result<Validation> {
        let j = self.matrix_at(x)?;
        let n = self.dim();
        let residual = (&j * &j + DMatrix::identity(n, n)).amax();
        Ok(Validation {
            residual,
            ok: residual <= tol,
        })
    }

    pub fn nijenhuis(&self, x: &[f64]) -> Result<NijenhuisComponents> {
        Ok(NijenhuisComponents::from_jet(&self.jet_at(x)?))
    }

    pub fn nijenhuis_apply(
        &self,
        x: &[f64],
        v: &DVector<f64>,
        w: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let n = self.dim();
        if v.len() != n || w.len() != n {
            return Err(Error::Dimension(format!(
                "Nijenhuis arguments must have length {n}"
            )));
        }
        Ok(self.nijenhuis(x)?.apply(v, w))
    }
}

/// `||S(x)^2||_max`; zero when the unipotent conjugation is exact.
pub fn nilpotency_residual(s: &MatrixField, x: &[f64]) -> Result<f64> {
    let m = s.eval(x)?;
    Ok((&m * &m).amax())
}

/// Components `N^a_{il}`, stored for `i < l` only.
#[derive(Debug, Clone, PartialEq)]
pub struct NijenhuisComponents {
    dim: usize,
    data: Vec<f64>,
}

impl NijenhuisComponents {
    fn pair_index(dim: usize, i: usize, l: usize) -> usize {
        debug_assert!(i < l);
        i * (2 * dim - i - 1) / 2 + (l - i - 1)
    }

    fn slot(&self, a: usize, i: usize, l: usize) -> usize {
        let pairs = self.dim * (self.dim - 1) / 2;
        a * pairs + Self::pair_index(self.dim, i, l)
    }

    /// Coordinate formula
    /// `N^a_{il} = J^m_i J^a_{l,m} - J^m_l J^a_{i,m} - J^a_m (J^m_{l,i} - J^m_{i,l})`.
    pub fn from_jet(jet: &MatrixJet) -> Self {
        let n = jet.value.nrows();
        let j = &jet.value;
        let d = &jet.partials;
        let pairs = n * (n - 1) / 2;
        let mut data = vec![0.0; n * pairs];
        for a in 0..n {
            for i in 0..n {
                for l in (i + 1)..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += j[(m, i)] * d[m][(a, l)] - j[(m, l)] * d[m][(a, i)]
                            - j[(a, m)] * (d[i][(m, l)] - d[l][(m, i)]);
                    }
                    data[a * pairs + Self::pair_index(n, i, l)] = s;
                }
            }
        }
        NijenhuisComponents { dim: n, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, i: usize, l: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&l) {
            Less => self.data[self.slot(a, i, l)],
            Greater => -self.data[self.slot(a, l, i)],
            Equal => 0.0,
        }
    }

    /// `N(v, w)^a = N^a_{il} v^i w^l`.
    pub fn apply(&self, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for a in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for l in (i + 1)..n {
                    s += self.data[self.slot(a, i, l)] * (v[i] * w[l] - v[l] * w[i]);
                }
            }
            out[a] = s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Dense `dim x dim x dim` copy, indexed `[a][i][l]`.
    pub fn to_dense(&self) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim;
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|i| (0..n).map(|l| self.get(a, i, l)).collect())
                    .collect()
            })
            .collect()
    }
}
