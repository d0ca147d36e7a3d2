//! Liu-type shrinkage and stochastic-restricted estimators for binary
//! logistic regression under multicollinearity.
//!
//! The crate provides
//!
//! * an IRLS maximum likelihood fit ([`fit_mle`]),
//! * exact bias, dispersion and MSE matrices for MLE, LLE, AULLE, SRMLE and
//!   SRAULLE ([`estimators`]),
//! * MSE-matrix superiority checks based on generalized eigenvalues
//!   ([`comparison`]),
//! * a reproducible, thread-count independent Monte Carlo engine
//!   ([`simulation`]) with table rendering ([`table`]),
//! * correlation and condition-number diagnostics ([`diagnostics`]).

pub mod comparison;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod model;
pub mod simulation;
pub mod table;

pub use comparison::{
    aulle_vs_sraulle_gap, compare, is_positive_definite, dominance_check, ComparisonVerdict, Superiority,
};
pub use diagnostics::{diagnostics, ConditionConvention, DiagnosticsReport};
pub use error::{Error, Result};
pub use estimators::{
    aulle_report, lle_report, mle_report, smse_over_grid, sraulle_report, srmle_report, EstimatorKind,
    EstimatorReport, LiuParameter, SmseGrid, StochasticRestriction,
};
pub use model::{fit_mle, predict_probabilities, Dataset, IrlsOptions, MleFit};
pub use simulation::{canonical_beta, run_monte_carlo, SimulationConfig, SimulationResult};
pub use table::{emit_table, RenderedTable};

pub use nalgebra::{DMatrix, DVector};
