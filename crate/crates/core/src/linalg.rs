//! Dense helpers around `nalgebra` for the p x p normal-equation systems.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative pivot floor below which a Cholesky factor is treated as singular.
const PIVOT_RTOL: f64 = 1e-12;

/// Cholesky factorization that reports rank deficiency instead of returning
/// a factor with vanishing pivots.
pub fn cholesky(a: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let diag = a.diagonal();
    let chol = Cholesky::new(a).ok_or(Error::RankDeficient)?;
    let l = chol.l_dirty();
    for j in 0..diag.len() {
        let pivot = l[(j, j)] * l[(j, j)];
        if !(pivot > PIVOT_RTOL * diag[j]) || !pivot.is_finite() {
            return Err(Error::RankDeficient);
        }
    }
    Ok(chol)
}

/// `X' diag(w) X` computed as `(sqrt(w) X)'(sqrt(w) X)`.
pub fn weighted_gram(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let xw = scale_rows(x, &w.map(f64::sqrt));
    xw.tr_mul(&xw)
}

pub fn scale_rows(x: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for (mut row, &si) in out.row_iter_mut().zip(s.iter()) {
        row *= si;
    }
    out
}

/// Log-determinant from a Cholesky factor.
pub fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Symmetrize in place; inverses from Cholesky are symmetric only to rounding.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Indices of columns that are (numerically) linear combinations of the
/// columns before them, found by modified Gram-Schmidt.
pub fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..x.ncols() {
        let mut v: DVector<f64> = x.column(j).into_owned();
        let norm0 = v.norm();
        for q in &basis {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= 1e-10 * norm0 {
            dependent.push(j);
        } else {
            basis.push(v / norm);
        }
    }
    dependent
}
