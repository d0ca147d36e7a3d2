//! Binary logistic model and its maximum likelihood fit.
//!
//! The fit is the fixed point of iteratively reweighted least squares,
//!
//! ```text
//! beta = C^-1 X' W z,   C = X' W X,   W = diag(pi (1 - pi)),
//! z_i  = logit(pi_i) + (y_i - pi_i) / (pi_i (1 - pi_i)),
//! ```
//!
//! started from `beta = 0` and stopped once the score `X'(y - pi)` is below
//! the tolerance in max-norm. No intercept column is added; callers own the
//! columns of `X`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Fitted probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` when
/// forming weights and working responses.
pub const PROB_CLAMP: f64 = 1e-10;

/// Sample information: `n x p` design and binary response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Validates `n > p >= 1`, a 0/1 response and full column rank.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if p == 0 {
            return Err(Error::InvalidInput("design matrix has no columns".into()));
        }
        if n <= p {
            return Err(Error::InvalidInput(format!(
                "need more observations than predictors (n = {n}, p = {p})"
            )));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                context: "response length vs design rows",
                expected: n,
                actual: y.len(),
            });
        }
        if let Some(i) = y.iter().position(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::InvalidInput(format!(
                "response entry {i} is {} (must be 0 or 1)",
                y[i]
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("design matrix has non-finite entries".into()));
        }
        let rank = linalg::rank(&x, n.max(p) as f64 * f64::EPSILON);
        if rank < p {
            return Err(Error::RankDeficient { rank, cols: p });
        }
        Ok(Self {
            x,
            y,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::DimensionMismatch {
                context: "feature names vs design columns",
                expected: self.p(),
                actual: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }
}

/// Numerically stable logistic function.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `pi_i = exp(x_i' beta) / (1 + exp(x_i' beta))` for every row of `x`.
pub fn predict_probabilities(x: &DMatrix<f64>, beta: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() != beta.len() {
        return Err(Error::DimensionMismatch {
            context: "design columns vs coefficient length",
            expected: x.ncols(),
            actual: beta.len(),
        });
    }
    Ok((x * beta).map(logistic))
}

/// `X' diag(w) X`.
pub fn weighted_gram(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = x.clone();
    for (mut row, wi) in scaled.row_iter_mut().zip(w.iter()) {
        row *= *wi;
    }
    linalg::symmetrize(&(x.transpose() * scaled))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    /// Convergence threshold on `max_j |X'(y - pi)|_j`.
    pub tol: f64,
    pub max_iter: usize,
    /// Separation is declared once `||beta||_2` exceeds this.
    pub separation_cap: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            separation_cap: 1e4,
        }
    }
}

impl IrlsOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if !(self.separation_cap > 0.0) {
            return Err(Error::InvalidInput("separation cap must be positive".into()));
        }
        Ok(())
    }
}

/// IRLS state at the final iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub beta_hat: DVector<f64>,
    /// Diagonal of `W_hat`, entries `pi_i (1 - pi_i)` on clamped probabilities.
    pub weights: DVector<f64>,
    /// `C = X' W_hat X`.
    pub c: DMatrix<f64>,
    pub working_response: DVector<f64>,
    pub probabilities: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

impl MleFit {
    pub fn p(&self) -> usize {
        self.beta_hat.len()
    }

    /// Dense `n x n` form of `W_hat`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.weights)
    }

    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                gradient_norm: self.gradient_norm,
            })
        }
    }

    /// Builds a fit directly from a known information matrix. Used when the
    /// MSE algebra is exercised on a prescribed `C` rather than on data.
    pub fn from_information(beta_hat: DVector<f64>, c: DMatrix<f64>) -> Result<Self> {
        if c.nrows() != beta_hat.len() || !c.is_square() {
            return Err(Error::DimensionMismatch {
                context: "information matrix vs coefficient length",
                expected: beta_hat.len(),
                actual: c.nrows(),
            });
        }
        linalg::cholesky(&c, "information matrix C")?;
        Ok(Self {
            beta_hat,
            weights: DVector::zeros(0),
            c: linalg::symmetrize(&c),
            working_response: DVector::zeros(0),
            probabilities: DVector::zeros(0),
            iterations: 0,
            converged: true,
            gradient_norm: 0.0,
        })
    }
}

struct IrlsState {
    eta: DVector<f64>,
    pi: DVector<f64>,
    weights: DVector<f64>,
    working: DVector<f64>,
    gradient_norm: f64,
}

fn irls_state(data: &Dataset, beta: &DVector<f64>) -> IrlsState {
    let eta = data.x() * beta;
    let pi = eta.map(logistic);
    let resid = data.y() - &pi;
    let gradient_norm = (data.x().transpose() * &resid).amax();
    let clamped = pi.map(|v| v.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP));
    let weights = clamped.map(|v| v * (1.0 - v));
    let working = DVector::from_iterator(
        eta.len(),
        (0..eta.len()).map(|i| eta[i] + (data.y()[i] - clamped[i]) / weights[i]),
    );
    IrlsState {
        eta,
        pi,
        weights,
        working,
        gradient_norm,
    }
}

fn check_separation(data: &Dataset, beta: &DVector<f64>, eta: &DVector<f64>) -> Result<()> {
    let saturation = ((1.0 - PROB_CLAMP) / PROB_CLAMP).ln();
    if let Some(i) = eta.iter().position(|e| e.abs() > saturation) {
        return Err(Error::Separation(format!(
            "fitted probability of observation {i} saturated (linear predictor {:.3})",
            eta[i]
        )));
    }
    // A finite MLE always misclassifies at least one observation; if the
    // current coefficients do not, they are a separating direction.
    let all_correct = eta
        .iter()
        .zip(data.y().iter())
        .all(|(e, y)| if *y == 1.0 { *e > 0.0 } else { *e < 0.0 });
    if all_correct && beta.norm() > 0.0 {
        return Err(Error::Separation(
            "the coefficient direction classifies every observation correctly".into(),
        ));
    }
    Ok(())
}

/// Maximum likelihood fit by IRLS starting from `beta = 0`.
///
/// Non-convergence is not an error: the last iterate is returned with
/// `converged = false`. Separation and a singular `C` are errors.
pub fn fit_mle(data: &Dataset, options: &IrlsOptions) -> Result<MleFit> {
    options.validate()?;
    let x = data.x();
    let mut beta = DVector::zeros(data.p());
    let mut state = irls_state(data, &beta);
    let mut iterations = 0;

    while state.gradient_norm >= options.tol && iterations < options.max_iter {
        let c = weighted_gram(x, &state.weights);
        let rhs = x.transpose() * state.weights.component_mul(&state.working);
        beta = linalg::cholesky(&c, "X'WX").map_err(|_| Error::Singular("X'WX during IRLS"))?
            .solve(&rhs);
        iterations += 1;
        if !beta.iter().all(|v| v.is_finite()) {
            return Err(Error::Singular("X'WX during IRLS (non-finite update)"));
        }
        let norm = beta.norm();
        if norm > options.separation_cap {
            return Err(Error::Separation(format!(
                "coefficient norm {norm:.3e} exceeded cap {:.3e} at iteration {iterations}",
                options.separation_cap
            )));
        }
        state = irls_state(data, &beta);
    }

    check_separation(data, &beta, &state.eta)?;

    let c = weighted_gram(x, &state.weights);
    linalg::cholesky(&c, "X'WX").map_err(|_| Error::Singular("X'WX at the final iterate"))?;
    Ok(MleFit {
        beta_hat: beta,
        weights: state.weights,
        c,
        working_response: state.working,
        probabilities: state.pi,
        iterations,
        converged: state.gradient_norm < options.tol,
        gradient_norm: state.gradient_norm,
    })
}
