//! MSE-matrix comparison of two estimators.
//!
//! `B` is superior to `A` when `MSE(A) - MSE(B)` is positive definite. With
//! `U = MSE(A) > 0` and `V = MSE(B) >= 0` this holds exactly when the largest
//! eigenvalue of `V U^-1` is below one, which is computed here as the top
//! eigenvalue of the symmetric generalized problem `V x = lambda U x`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimators::{almost_unbiased_filter, restricted_moments, EstimatorKind, EstimatorReport, LiuParameter, StochasticRestriction};
use crate::linalg;
use crate::model::MleFit;

/// Relative eigenvalue threshold below which a direction counts as null.
pub const PD_TOL: f64 = 1e-10;

/// Band around `lambda_max = 1` treated as the boundary case.
pub const LAMBDA_BOUNDARY_TOL: f64 = 1e-10;

/// Relative threshold for the numerical rank of the AULLE/SRAULLE gap.
pub const GAP_RANK_TOL: f64 = 1e-8;

/// True iff the smallest eigenvalue of `sym(m)` exceeds `tol * max |eig|`.
pub fn is_positive_definite(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() || m.nrows() == 0 {
        return false;
    }
    let eigs = linalg::sym_eigenvalues(m);
    let scale = linalg::spectral_scale(&eigs);
    scale > 0.0 && eigs[0] > tol * scale
}

/// Top generalized eigenvalue of `(n, m)` and whether `m - n > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceCheck {
    pub lambda_max: f64,
    pub dominates: bool,
}

/// Largest eigenvalue of `n m^-1` via `L^-1 n L^-T` with `m = L L'`.
pub fn generalized_lambda_max(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<f64> {
    if m.shape() != n.shape() {
        return Err(Error::DimensionMismatch {
            context: "generalized eigenproblem operands",
            expected: m.nrows(),
            actual: n.nrows(),
        });
    }
    let chol = linalg::cholesky(&linalg::symmetrize(m), "M in lambda_max(N M^-1)")?;
    let l = chol.l();
    let half = l
        .solve_lower_triangular(&linalg::symmetrize(n))
        .ok_or(Error::Singular("Cholesky factor"))?;
    let whitened = l
        .solve_lower_triangular(&half.transpose())
        .ok_or(Error::Singular("Cholesky factor"))?;
    let eigs = linalg::sym_eigenvalues(&whitened);
    Ok(*eigs.last().expect("non-empty matrix"))
}

/// `m > n` iff `lambda_max(n m^-1) < 1`, for `m` SPD and `n` PSD.
pub fn dominance_check(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<DominanceCheck> {
    let lambda_max = generalized_lambda_max(m, n)?;
    Ok(DominanceCheck {
        lambda_max,
        dominates: lambda_max < 1.0,
    })
}

/// Outcome of comparing `A` (first) against `B` (second).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Superiority {
    /// `MSE(A) - MSE(B)` is positive definite.
    BSuperior,
    /// `MSE(A) - MSE(B)` is positive semi-definite and nonzero with the given rank.
    BSuperiorSemidefinite { rank: usize },
    /// Some direction has larger MSE under `B`: `A` wins or the two are incomparable.
    ASuperiorOrIncomparable,
    /// Boundary: the difference vanishes or sits at `lambda_max = 1`.
    Indefinite,
}

impl Superiority {
    pub fn label(self) -> String {
        match self {
            Superiority::BSuperior => "B-superior".into(),
            Superiority::BSuperiorSemidefinite { rank } => format!("B-superior (semi-definite, rank {rank})"),
            Superiority::ASuperiorOrIncomparable => "A-superior-or-incomparable".into(),
            Superiority::Indefinite => "indefinite".into(),
        }
    }

    pub fn favours_b(self) -> bool {
        matches!(self, Superiority::BSuperior | Superiority::BSuperiorSemidefinite { .. })
    }
}

impl fmt::Display for Superiority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonVerdict {
    pub first: EstimatorKind,
    pub second: EstimatorKind,
    pub d: Option<f64>,
    /// `MSE(first) - MSE(second)`.
    pub difference: DMatrix<f64>,
    /// Ascending eigenvalues of `difference`.
    pub difference_eigenvalues: Vec<f64>,
    /// `lambda_max(V U^-1)` with `U = MSE(first)`, when `U` is positive definite.
    pub lambda_max: Option<f64>,
    pub superior: Superiority,
    pub certificate: String,
    /// `SMSE(first) - SMSE(second)`.
    pub trace_gap: f64,
}

pub fn compare(a: &EstimatorReport, b: &EstimatorReport) -> Result<ComparisonVerdict> {
    if a.mse_matrix.shape() != b.mse_matrix.shape() {
        return Err(Error::DimensionMismatch {
            context: "compared MSE matrices",
            expected: a.p(),
            actual: b.p(),
        });
    }
    let p = a.p();
    let difference = linalg::symmetrize(&(&a.mse_matrix - &b.mse_matrix));
    let eigs = linalg::sym_eigenvalues(&difference);
    let scale = linalg::spectral_scale(&linalg::sym_eigenvalues(&a.mse_matrix))
        .max(linalg::spectral_scale(&linalg::sym_eigenvalues(&b.mse_matrix)));
    let tol = PD_TOL * scale;

    let lambda_max = if is_positive_definite(&a.mse_matrix, PD_TOL) {
        generalized_lambda_max(&a.mse_matrix, &b.mse_matrix).ok()
    } else {
        None
    };

    let positive = eigs.iter().filter(|e| **e > tol).count();
    let negative = eigs.iter().filter(|e| **e < -tol).count();

    let (superior, certificate) = match lambda_max {
        Some(l) if l < 1.0 - LAMBDA_BOUNDARY_TOL => (
            Superiority::BSuperior,
            format!("lambda_max(V U^-1) = {l:.12} < 1"),
        ),
        Some(l) if l > 1.0 + LAMBDA_BOUNDARY_TOL => (
            Superiority::ASuperiorOrIncomparable,
            format!("lambda_max(V U^-1) = {l:.12} > 1"),
        ),
        _ => {
            let lam = lambda_max.map_or_else(|| "U not positive definite".to_string(), |l| format!("lambda_max(V U^-1) = {l:.12}"));
            if negative == 0 && positive == p {
                (Superiority::BSuperior, format!("{lam}; difference positive definite"))
            } else if negative == 0 && positive > 0 {
                (
                    Superiority::BSuperiorSemidefinite { rank: positive },
                    format!("{lam}; difference positive semi-definite with rank {positive}"),
                )
            } else if negative > 0 && lambda_max.is_none() {
                (
                    Superiority::ASuperiorOrIncomparable,
                    format!("{lam}; difference has {negative} negative eigenvalue(s)"),
                )
            } else {
                (Superiority::Indefinite, format!("{lam}; boundary case"))
            }
        }
    };

    Ok(ComparisonVerdict {
        first: a.kind,
        second: b.kind,
        d: a.d.or(b.d),
        trace_gap: a.smse - b.smse,
        difference,
        difference_eigenvalues: eigs,
        lambda_max,
        superior,
        certificate,
    })
}

/// `MSE(AULLE) - MSE(SRAULLE) = W_d (C^-1 - R) W_d'`.
///
/// The bias terms of the two estimators are identical and cancel, so the
/// gap is independent of the reference coefficients. `C^-1 - R` is formed as
/// `C^-1 H' (Psi + H C^-1 H')^-1 H C^-1`, which makes its rank `q` explicit.
pub fn aulle_vs_sraulle_gap(
    fit: &MleFit,
    restriction: &StochasticRestriction,
    d: LiuParameter,
) -> Result<DMatrix<f64>> {
    fit.ensure_converged()?;
    let m = restricted_moments(fit, restriction)?;
    let w = almost_unbiased_filter(&fit.c, d)?;
    Ok(linalg::symmetrize(&(&w * m.reduction * w.transpose())))
}

/// Spectral summary of a PSD-by-construction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub trace: f64,
    pub positive_semidefinite: bool,
}

pub fn certify_gap(gap: &DMatrix<f64>) -> GapCertificate {
    let eigenvalues = linalg::sym_eigenvalues(gap);
    let scale = linalg::spectral_scale(&eigenvalues);
    let rank = eigenvalues.iter().filter(|e| **e > GAP_RANK_TOL * scale).count();
    let positive_semidefinite = eigenvalues.first().is_none_or(|e| *e >= -PD_TOL * scale);
    GapCertificate {
        rank,
        trace: gap.trace(),
        positive_semidefinite,
        eigenvalues,
    }
}

/// The four pairwise comparisons against SRAULLE at one `d`.
pub fn compare_against_sraulle(reports: &[EstimatorReport; 5]) -> Result<Vec<ComparisonVerdict>> {
    let sraulle = &reports[EstimatorKind::Sraulle.index()];
    [EstimatorKind::Mle, EstimatorKind::Lle, EstimatorKind::Aulle, EstimatorKind::Srmle]
        .into_iter()
        .map(|k| compare(&reports[k.index()], sraulle))
        .collect()
}
