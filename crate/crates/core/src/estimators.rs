//! Liu-type and stochastic-restricted estimators with their exact moments.
//!
//! All five estimators are linear filters of either the MLE or the
//! stochastic restricted MLE:
//!
//! | estimator | point estimate       | bias                  | dispersion      |
//! |-----------|----------------------|-----------------------|-----------------|
//! | MLE       | `b`                  | `0`                   | `C^-1`          |
//! | LLE       | `Z_d b`              | `(Z_d - I) beta`      | `Z_d C^-1 Z_d'` |
//! | AULLE     | `W_d b`              | `(W_d - I) beta`      | `W_d C^-1 W_d'` |
//! | SRMLE     | `b_r`                | `0`                   | `R`             |
//! | SRAULLE   | `W_d b_r`            | `(W_d - I) beta`      | `W_d R W_d'`    |
//!
//! with `Z_d = (C + I)^-1 (C + dI)`, `W_d = I - (1 - d)^2 (C + I)^-2` and
//! `R = (C + H' Psi^-1 H)^-1`. The bias is evaluated at a caller-supplied
//! reference coefficient vector: the true `beta` in simulations, the MLE as a
//! plug-in on observed data.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::MleFit;

/// Relative tolerance for agreement of the two closed forms of `R`.
pub const WOODBURY_TOL: f64 = 1e-8;

/// Liu biasing parameter `d`, restricted to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LiuParameter(f64);

impl LiuParameter {
    pub fn new(d: f64) -> Result<Self> {
        if d > 0.0 && d < 1.0 {
            Ok(Self(d))
        } else {
            Err(Error::InvalidLiuParameter(d))
        }
    }

    /// Accepts the closed interval [0, 1]; only for boundary and limit checks.
    pub fn new_unchecked(d: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&d));
        Self(d)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for LiuParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Prior information `h = H beta + v`, `E v = 0`, `Cov v = Psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticRestriction {
    h_matrix: DMatrix<f64>,
    h: DVector<f64>,
    psi: DMatrix<f64>,
}

impl StochasticRestriction {
    pub fn new(h_matrix: DMatrix<f64>, h: DVector<f64>, psi: DMatrix<f64>) -> Result<Self> {
        let (q, p) = h_matrix.shape();
        if q == 0 || p == 0 {
            return Err(Error::InvalidInput("restriction matrix H is empty".into()));
        }
        if q > p {
            return Err(Error::InvalidInput(format!(
                "restriction has more rows than parameters (q = {q}, p = {p})"
            )));
        }
        if h.len() != q {
            return Err(Error::DimensionMismatch {
                context: "restriction vector h vs rows of H",
                expected: q,
                actual: h.len(),
            });
        }
        if psi.shape() != (q, q) {
            return Err(Error::DimensionMismatch {
                context: "Psi must be q x q",
                expected: q,
                actual: psi.nrows().max(psi.ncols()),
            });
        }
        let rank = linalg::rank(&h_matrix, p as f64 * f64::EPSILON * 16.0);
        if rank < q {
            return Err(Error::RankDeficient { rank, cols: q });
        }
        if !linalg::is_symmetric(&psi, 1e-12) {
            return Err(Error::InvalidInput("Psi is not symmetric".into()));
        }
        linalg::cholesky(&psi, "Psi")?;
        Ok(Self {
            h_matrix,
            h,
            psi: linalg::symmetrize(&psi),
        })
    }

    /// The four-parameter restriction used in the reference simulation:
    /// three linear combinations with unit disturbance variance.
    pub fn reference_four_parameter() -> Self {
        let h_matrix = DMatrix::from_row_slice(
            3,
            4,
            &[1.0, -1.0, 0.0, 1.0, 1.0, 1.0, -1.0, 0.0, 0.0, 0.0, 1.0, -1.0],
        );
        let h = DVector::from_vec(vec![1.0, -2.0, 1.0]);
        Self::new(h_matrix, h, DMatrix::identity(3, 3)).expect("reference restriction is valid")
    }

    pub fn h_matrix(&self) -> &DMatrix<f64> {
        &self.h_matrix
    }

    pub fn h(&self) -> &DVector<f64> {
        &self.h
    }

    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    pub fn q(&self) -> usize {
        self.h_matrix.nrows()
    }

    pub fn p(&self) -> usize {
        self.h_matrix.ncols()
    }

    /// Same `H` and `Psi`, different right-hand side.
    pub fn with_h(&self, h: DVector<f64>) -> Result<Self> {
        if h.len() != self.q() {
            return Err(Error::DimensionMismatch {
                context: "restriction vector h vs rows of H",
                expected: self.q(),
                actual: h.len(),
            });
        }
        Ok(Self {
            h,
            ..self.clone()
        })
    }

    fn check_p(&self, p: usize) -> Result<()> {
        if self.p() != p {
            return Err(Error::DimensionMismatch {
                context: "restriction columns vs model parameters",
                expected: p,
                actual: self.p(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimatorKind {
    Mle,
    Lle,
    Aulle,
    Srmle,
    Sraulle,
}

impl EstimatorKind {
    /// Canonical reporting order.
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Mle,
        EstimatorKind::Lle,
        EstimatorKind::Aulle,
        EstimatorKind::Srmle,
        EstimatorKind::Sraulle,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Mle => "MLE",
            EstimatorKind::Lle => "LLE",
            EstimatorKind::Aulle => "AULLE",
            EstimatorKind::Srmle => "SRMLE",
            EstimatorKind::Sraulle => "SRAULLE",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(label.trim()))
    }

    /// Whether the estimator depends on the Liu parameter.
    pub fn uses_d(self) -> bool {
        matches!(self, EstimatorKind::Lle | EstimatorKind::Aulle | EstimatorKind::Sraulle)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Point estimate together with its exact first two moments.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub kind: EstimatorKind,
    pub d: Option<f64>,
    pub beta: DVector<f64>,
    pub bias: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub mse_matrix: DMatrix<f64>,
    pub smse: f64,
}

impl EstimatorReport {
    /// Assembles `MSE = D + b b'` and `SMSE = tr MSE`.
    pub fn from_moments(
        kind: EstimatorKind,
        d: Option<f64>,
        beta: DVector<f64>,
        bias: DVector<f64>,
        covariance: DMatrix<f64>,
    ) -> Self {
        let covariance = linalg::symmetrize(&covariance);
        let mse_matrix = linalg::symmetrize(&(&covariance + &bias * bias.transpose()));
        let smse = mse_matrix.trace();
        Self {
            kind,
            d,
            beta,
            bias,
            covariance,
            mse_matrix,
            smse,
        }
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }
}

/// `(C + I)^-1`, the matrix both Liu filters are built from.
fn resolvent(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = c.nrows();
    linalg::spd_inverse(&(c + DMatrix::identity(p, p)), "C + I")
}

fn liu_from_resolvent(g: &DMatrix<f64>, d: LiuParameter) -> DMatrix<f64> {
    let p = g.nrows();
    linalg::symmetrize(&(DMatrix::identity(p, p) - g * (1.0 - d.value())))
}

fn almost_unbiased_from_resolvent(g: &DMatrix<f64>, d: LiuParameter) -> DMatrix<f64> {
    let p = g.nrows();
    let s = (1.0 - d.value()).powi(2);
    linalg::symmetrize(&(DMatrix::identity(p, p) - (g * g) * s))
}

fn check_square(c: &DMatrix<f64>) -> Result<()> {
    if c.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: "C must be square",
            expected: c.nrows(),
            actual: c.ncols(),
        })
    }
}

/// Liu filter `Z_d = (C + I)^-1 (C + dI) = I - (1 - d)(C + I)^-1`.
pub fn liu_filter(c: &DMatrix<f64>, d: LiuParameter) -> Result<DMatrix<f64>> {
    check_square(c)?;
    Ok(liu_from_resolvent(&resolvent(c)?, d))
}

/// Almost-unbiased filter `W_d = I - (1 - d)^2 (C + I)^-2`.
pub fn almost_unbiased_filter(c: &DMatrix<f64>, d: LiuParameter) -> Result<DMatrix<f64>> {
    check_square(c)?;
    Ok(almost_unbiased_from_resolvent(&resolvent(c)?, d))
}

fn check_beta_ref(fit: &MleFit, beta_ref: &DVector<f64>) -> Result<()> {
    if beta_ref.len() != fit.p() {
        return Err(Error::DimensionMismatch {
            context: "reference coefficients vs model parameters",
            expected: fit.p(),
            actual: beta_ref.len(),
        });
    }
    Ok(())
}

fn c_inverse(fit: &MleFit) -> Result<DMatrix<f64>> {
    linalg::spd_inverse(&fit.c, "C").map_err(|_| Error::Singular("C = X'WX"))
}

fn filtered_report(
    kind: EstimatorKind,
    filter: &DMatrix<f64>,
    base_beta: &DVector<f64>,
    base_cov: &DMatrix<f64>,
    d: LiuParameter,
    beta_ref: &DVector<f64>,
) -> EstimatorReport {
    let p = filter.nrows();
    let beta = filter * base_beta;
    let bias = (filter - DMatrix::identity(p, p)) * beta_ref;
    let covariance = filter * base_cov * filter.transpose();
    EstimatorReport::from_moments(kind, Some(d.value()), beta, bias, covariance)
}

/// MLE: unbiased, `MSE = C^-1`.
pub fn mle_report(fit: &MleFit) -> Result<EstimatorReport> {
    fit.ensure_converged()?;
    let p = fit.p();
    Ok(EstimatorReport::from_moments(
        EstimatorKind::Mle,
        None,
        fit.beta_hat.clone(),
        DVector::zeros(p),
        c_inverse(fit)?,
    ))
}

pub fn lle_report(fit: &MleFit, d: LiuParameter, beta_ref: &DVector<f64>) -> Result<EstimatorReport> {
    fit.ensure_converged()?;
    check_beta_ref(fit, beta_ref)?;
    let z = liu_filter(&fit.c, d)?;
    Ok(filtered_report(EstimatorKind::Lle, &z, &fit.beta_hat, &c_inverse(fit)?, d, beta_ref))
}

pub fn aulle_report(fit: &MleFit, d: LiuParameter, beta_ref: &DVector<f64>) -> Result<EstimatorReport> {
    fit.ensure_converged()?;
    check_beta_ref(fit, beta_ref)?;
    let w = almost_unbiased_filter(&fit.c, d)?;
    Ok(filtered_report(EstimatorKind::Aulle, &w, &fit.beta_hat, &c_inverse(fit)?, d, beta_ref))
}

/// Ingredients shared by the restricted estimators.
#[derive(Debug, Clone)]
pub(crate) struct RestrictedMoments {
    pub beta: DVector<f64>,
    /// `R = (C + H' Psi^-1 H)^-1`.
    pub r: DMatrix<f64>,
    /// `C^-1 H' (Psi + H C^-1 H')^-1 H C^-1 = C^-1 - R`.
    pub reduction: DMatrix<f64>,
}

pub(crate) fn restricted_moments(fit: &MleFit, restriction: &StochasticRestriction) -> Result<RestrictedMoments> {
    restriction.check_p(fit.p())?;
    let h_mat = restriction.h_matrix();
    let c_inv = c_inverse(fit)?;
    let c_inv_ht = &c_inv * h_mat.transpose();
    let s = linalg::symmetrize(&(restriction.psi() + h_mat * &c_inv_ht));
    let s_chol = linalg::cholesky(&s, "Psi + H C^-1 H'").map_err(|_| Error::Singular("Psi + H C^-1 H'"))?;

    let discrepancy = restriction.h() - h_mat * &fit.beta_hat;
    let beta = &fit.beta_hat + &c_inv_ht * s_chol.solve(&discrepancy);

    let reduction = linalg::symmetrize(&(&c_inv_ht * s_chol.solve(&c_inv_ht.transpose())));
    let r_woodbury = linalg::symmetrize(&(&c_inv - &reduction));

    let psi_inv_h = linalg::cholesky(restriction.psi(), "Psi")?.solve(h_mat);
    let augmented = linalg::symmetrize(&(&fit.c + h_mat.transpose() * psi_inv_h));
    let r_direct = linalg::spd_inverse(&augmented, "C + H' Psi^-1 H")
        .map_err(|_| Error::Singular("C + H' Psi^-1 H"))?;

    let gap = linalg::relative_frobenius(&r_woodbury, &r_direct);
    if !(gap <= WOODBURY_TOL) {
        return Err(Error::Inconsistent(format!(
            "the two forms of the restricted dispersion disagree (relative error {gap:.3e})"
        )));
    }
    Ok(RestrictedMoments {
        beta,
        r: r_direct,
        reduction,
    })
}

/// Stochastic restricted MLE (mixed estimator): unbiased, `MSE = R`.
pub fn srmle_report(fit: &MleFit, restriction: &StochasticRestriction) -> Result<EstimatorReport> {
    fit.ensure_converged()?;
    let m = restricted_moments(fit, restriction)?;
    Ok(EstimatorReport::from_moments(
        EstimatorKind::Srmle,
        None,
        m.beta,
        DVector::zeros(fit.p()),
        m.r,
    ))
}

/// `W_d` applied to the stochastic restricted MLE.
pub fn sraulle_report(
    fit: &MleFit,
    restriction: &StochasticRestriction,
    d: LiuParameter,
    beta_ref: &DVector<f64>,
) -> Result<EstimatorReport> {
    fit.ensure_converged()?;
    check_beta_ref(fit, beta_ref)?;
    let m = restricted_moments(fit, restriction)?;
    let w = almost_unbiased_filter(&fit.c, d)?;
    Ok(filtered_report(EstimatorKind::Sraulle, &w, &m.beta, &m.r, d, beta_ref))
}

/// All five reports at one `d`, in canonical order.
pub fn all_reports(
    fit: &MleFit,
    restriction: &StochasticRestriction,
    d: LiuParameter,
    beta_ref: &DVector<f64>,
) -> Result<[EstimatorReport; 5]> {
    Ok([
        mle_report(fit)?,
        lle_report(fit, d, beta_ref)?,
        aulle_report(fit, d, beta_ref)?,
        srmle_report(fit, restriction)?,
        sraulle_report(fit, restriction, d, beta_ref)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmseRow {
    pub kind: EstimatorKind,
    pub smse: Vec<f64>,
    /// Grid value with the smallest SMSE (first one on ties).
    pub argmin_d: f64,
}

/// SMSE of every estimator over a grid of `d` values.
#[derive(Debug, Clone, PartialEq)]
pub struct SmseGrid {
    pub d_values: Vec<f64>,
    pub rows: Vec<SmseRow>,
}

impl SmseGrid {
    pub fn row(&self, kind: EstimatorKind) -> &SmseRow {
        &self.rows[kind.index()]
    }

    /// Flattened `(estimator, d, smse)` triples.
    pub fn entries(&self) -> impl Iterator<Item = (EstimatorKind, f64, f64)> + '_ {
        self.rows.iter().flat_map(move |row| {
            self.d_values
                .iter()
                .zip(row.smse.iter())
                .map(move |(d, s)| (row.kind, *d, *s))
        })
    }
}

pub fn smse_over_grid(
    fit: &MleFit,
    restriction: &StochasticRestriction,
    d_grid: &[LiuParameter],
    beta_ref: &DVector<f64>,
) -> Result<SmseGrid> {
    if d_grid.is_empty() {
        return Err(Error::InvalidInput("d grid is empty".into()));
    }
    for d in d_grid {
        LiuParameter::new(d.value())?;
    }
    let mle = mle_report(fit)?.smse;
    let srmle = srmle_report(fit, restriction)?.smse;
    let mut columns: [Vec<f64>; 5] = Default::default();
    for d in d_grid {
        columns[EstimatorKind::Mle.index()].push(mle);
        columns[EstimatorKind::Lle.index()].push(lle_report(fit, *d, beta_ref)?.smse);
        columns[EstimatorKind::Aulle.index()].push(aulle_report(fit, *d, beta_ref)?.smse);
        columns[EstimatorKind::Srmle.index()].push(srmle);
        columns[EstimatorKind::Sraulle.index()].push(sraulle_report(fit, restriction, *d, beta_ref)?.smse);
    }
    let d_values: Vec<f64> = d_grid.iter().map(|d| d.value()).collect();
    let rows = EstimatorKind::ALL
        .into_iter()
        .zip(columns)
        .map(|(kind, smse)| {
            let best = smse
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if *v < smse[best] { i } else { best });
            SmseRow {
                kind,
                argmin_d: d_values[best],
                smse,
            }
        })
        .collect();
    Ok(SmseGrid { d_values, rows })
}

/// Point estimates of all five estimators over a `d` grid, computed with
/// linear solves only. Used by the Monte Carlo engine.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimates {
    pub mle: DVector<f64>,
    pub srmle: DVector<f64>,
    pub lle: Vec<DVector<f64>>,
    pub aulle: Vec<DVector<f64>>,
    pub sraulle: Vec<DVector<f64>>,
}

pub fn point_estimates(
    fit: &MleFit,
    restriction: &StochasticRestriction,
    d_grid: &[f64],
) -> Result<PointEstimates> {
    restriction.check_p(fit.p())?;
    let p = fit.p();
    let h_mat = restriction.h_matrix();
    let c_chol = linalg::cholesky(&fit.c, "C").map_err(|_| Error::Singular("C = X'WX"))?;
    let c_inv_ht = c_chol.solve(&h_mat.transpose());
    let s = linalg::symmetrize(&(restriction.psi() + h_mat * &c_inv_ht));
    let s_chol = linalg::cholesky(&s, "Psi + H C^-1 H'").map_err(|_| Error::Singular("Psi + H C^-1 H'"))?;
    let b = &fit.beta_hat;
    let srmle = b + &c_inv_ht * s_chol.solve(&(restriction.h() - h_mat * b));

    let shifted = linalg::cholesky(&(&fit.c + DMatrix::identity(p, p)), "C + I")?;
    let g_b = shifted.solve(b);
    let g2_b = shifted.solve(&g_b);
    let g2_sr = shifted.solve(&shifted.solve(&srmle));

    let lle = d_grid.iter().map(|d| b - &g_b * (1.0 - d)).collect();
    let aulle = d_grid.iter().map(|d| b - &g2_b * (1.0 - d).powi(2)).collect();
    let sraulle = d_grid.iter().map(|d| &srmle - &g2_sr * (1.0 - d).powi(2)).collect();
    Ok(PointEstimates {
        mle: b.clone(),
        srmle,
        lle,
        aulle,
        sraulle,
    })
}
