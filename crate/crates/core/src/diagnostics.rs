//! Multicollinearity diagnostics for a design matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Dataset;

/// Pairs with `|r|` above this are flagged.
pub const HIGH_CORRELATION: f64 = 0.9;

/// How `X'X` is scaled before taking the eigenvalue ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConditionConvention {
    /// Columns scaled to unit Euclidean length (no centering).
    #[default]
    UnitLength,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub correlation_matrix: DMatrix<f64>,
    /// `sqrt(lambda_max / lambda_min)` of `X'X` under `convention`.
    pub condition_number: f64,
    pub convention: ConditionConvention,
    /// `(i, j, r_ij)` with `i < j` and `|r_ij| > 0.9`.
    pub flagged_pairs: Vec<(usize, usize, f64)>,
}

/// Pearson correlation matrix of the columns of `x`.
pub fn correlation_matrix(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two rows for correlations".into()));
    }
    let mut centered = x.clone();
    let mut norms = Vec::with_capacity(p);
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::InvalidInput(format!(
                "column {j} is constant; correlation is undefined"
            )));
        }
        norms.push(norm);
    }
    let mut r = centered.transpose() * &centered;
    for i in 0..p {
        for j in 0..p {
            r[(i, j)] /= norms[i] * norms[j];
        }
    }
    let mut r = linalg::symmetrize(&r);
    for i in 0..p {
        r[(i, i)] = 1.0;
    }
    Ok(r)
}

pub fn condition_number(x: &DMatrix<f64>, convention: ConditionConvention) -> Result<f64> {
    let mut scaled = x.clone();
    if convention == ConditionConvention::UnitLength {
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == 0.0 {
                return Err(Error::InvalidInput(format!("column {j} is identically zero")));
            }
            col /= norm;
        }
    }
    let eigs = linalg::sym_eigenvalues(&(scaled.transpose() * &scaled));
    let (lo, hi) = (eigs[0], eigs[eigs.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::Singular("X'X in condition number"));
    }
    Ok((hi / lo).sqrt().max(1.0))
}

pub fn diagnostics(data: &Dataset, convention: ConditionConvention) -> Result<DiagnosticsReport> {
    let correlation_matrix = correlation_matrix(data.x())?;
    let condition_number = condition_number(data.x(), convention)?;
    let p = data.p();
    let flagged_pairs = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, correlation_matrix[(i, j)]))
        .filter(|(_, _, r)| r.abs() > HIGH_CORRELATION)
        .collect();
    Ok(DiagnosticsReport {
        correlation_matrix,
        condition_number,
        convention,
        flagged_pairs,
    })
}
