//! Small dense helpers: Gram-Schmidt, orthogonal complements, principal angles.

use nalgebra::{DMatrix, DVector};

/// Relative threshold below which a Gram-Schmidt residual counts as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Orthonormalizes columns in order (modified Gram-Schmidt, two passes),
/// dropping columns whose residual falls below `tol` times their norm.
pub fn orthonormalize(cols: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let norm0 = c.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut r = c.clone();
        for _ in 0..2 {
            for q in &out {
                let k = q.dot(&r);
                r.axpy(-k, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm > tol * norm0 {
            out.push(r / norm);
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of `span(constraints)` in
/// `R^n`, built greedily from the coordinate axes. Returns the numerical
/// rank of the constraints alongside the basis.
pub fn complement(constraints: &[DVector<f64>], n: usize) -> (usize, Vec<DVector<f64>>) {
    let mut q = orthonormalize(constraints, RANK_TOL);
    let rank = q.len();
    let mut basis = Vec::with_capacity(n.saturating_sub(rank));
    let mut used = vec![false; n];
    while q.len() < n {
        // pick the axis with the largest residual against the current span
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for k in (0..n).filter(|&k| !used[k]) {
            let mut r = DVector::zeros(n);
            r[k] = 1.0;
            for _ in 0..2 {
                for v in &q {
                    let c = v.dot(&r);
                    r.axpy(-c, v, 1.0);
                }
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|b| norm > b.2) {
                best = Some((k, r, norm));
            }
        }
        let Some((k, r, norm)) = best else { break };
        used[k] = true;
        if norm <= RANK_TOL {
            break;
        }
        let v = r / norm;
        q.push(v.clone());
        basis.push(v);
    }
    (rank, basis)
}

pub fn columns_to_matrix(cols: &[DVector<f64>], rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

pub fn matrix_columns(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    m.column_iter().map(|c| c.clone_owned()).collect()
}

/// Principal-angle data between two subspaces given by orthonormal bases.
#[derive(Debug, Clone)]
pub struct PrincipalAngles {
    /// Cosines, descending.
    pub cosines: Vec<f64>,
    /// Smallest principal angle in radians.
    pub smallest: f64,
    /// Left singular vectors of `A^T B`, aligned with `cosines`.
    pub left: DMatrix<f64>,
}

pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> PrincipalAngles {
    let m = a.transpose() * b;
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let cosines: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].min(1.0)).collect();
    let left = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);

    // For small angles acos is ill-conditioned; use the sine of the smallest
    // angle from the residual of B against span(A) instead.
    let top = cosines.first().copied().unwrap_or(0.0);
    let smallest = if top * top < 0.5 {
        top.acos()
    } else {
        let resid = b - a * &m;
        let sines = resid.svd(false, false).singular_values;
        let min_sine = sines.iter().copied().fold(f64::INFINITY, f64::min);
        min_sine.clamp(0.0, 1.0).asin()
    };
    PrincipalAngles {
        cosines,
        smallest,
        left,
    }
}
