//! Small dense linear-algebra helpers shared by the estimator modules.
//!
//! Everything here works on symmetric positive-definite inputs and goes
//! through a Cholesky factorisation rather than a general inverse.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Replaces `m` with `(m + m') / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite(what))
}

/// Inverse of an SPD matrix via its Cholesky factor, symmetrized.
pub fn spd_inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let chol = cholesky(m, what)?;
    Ok(symmetrize(&chol.inverse()))
}

pub fn spd_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    Ok(cholesky(m, what)?.solve(rhs))
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Largest absolute eigenvalue, used as the scale for relative tolerances.
pub fn spectral_scale(eigs: &[f64]) -> f64 {
    eigs.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Numerical rank from the singular values.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, v| a.max(*v));
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).norm() <= rel_tol * m.norm().max(f64::MIN_POSITIVE)
}
