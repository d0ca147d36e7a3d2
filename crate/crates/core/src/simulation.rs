//! Monte Carlo comparison of the five estimators.
//!
//! For every `(n, rho)` pair a collinear design is drawn once,
//!
//! ```text
//! x_ij = sqrt(1 - rho^2) z_ij + rho z_{i,p+1},
//! ```
//!
//! and held fixed while responses `y_i ~ Bernoulli(pi_i)` and restriction
//! disturbances `v ~ N(0, Psi)` are redrawn in every replication. The
//! empirical SMSE of an estimator is the plain average of
//! `(b_r - beta)'(b_r - beta)` over the successful replications.
//!
//! Every random draw comes from a ChaCha8 stream whose seed is derived from
//! `(master_seed, n, rho, purpose, replication)`, so results do not depend on
//! how replications are scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{point_estimates, EstimatorKind, StochasticRestriction};
use crate::linalg;
use crate::model::{logistic, fit_mle, Dataset, IrlsOptions};

pub const DEFAULT_MASTER_SEED: u64 = 20170101;

/// Cells with more than this fraction of failed fits are marked invalid.
pub const MAX_FAILED_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n_values: Vec<usize>,
    pub rho_values: Vec<f64>,
    pub d_grid: Vec<f64>,
    pub p: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub restriction: StochasticRestriction,
    pub beta_true: DVector<f64>,
    /// Draw a fresh design in every replication instead of once per `(n, rho)`.
    pub redraw_design: bool,
    /// Use one disturbance draw per `(n, rho)` for `h` instead of one per replication.
    pub fixed_h: bool,
    pub irls: IrlsOptions,
}

pub fn default_d_grid() -> Vec<f64> {
    vec![0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99]
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_values: vec![25, 50, 75, 100],
            rho_values: vec![0.7, 0.8, 0.9, 0.99],
            d_grid: default_d_grid(),
            p: 4,
            replications: 1000,
            master_seed: DEFAULT_MASTER_SEED,
            restriction: StochasticRestriction::reference_four_parameter(),
            beta_true: canonical_beta(4),
            redraw_design: false,
            fixed_h: false,
            irls: IrlsOptions::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidInput(msg));
        if self.replications == 0 {
            return invalid("replications: must be at least 1".into());
        }
        if self.p == 0 {
            return invalid("p: must be at least 1".into());
        }
        if self.n_values.is_empty() {
            return invalid("n_values: must not be empty".into());
        }
        if let Some(n) = self.n_values.iter().find(|n| **n <= self.p) {
            return invalid(format!("n_values: n = {n} must exceed p = {}", self.p));
        }
        if self.rho_values.is_empty() {
            return invalid("rho_values: must not be empty".into());
        }
        if let Some(r) = self.rho_values.iter().find(|r| !(**r >= 0.0 && **r < 1.0)) {
            return invalid(format!("rho_values: {r} outside [0, 1)"));
        }
        if self.d_grid.is_empty() {
            return invalid("d_grid: must not be empty".into());
        }
        if let Some(d) = self.d_grid.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return invalid(format!("d_grid: {d} outside (0, 1)"));
        }
        if self.beta_true.len() != self.p {
            return invalid(format!(
                "beta_true: length {} does not match p = {}",
                self.beta_true.len(),
                self.p
            ));
        }
        if self.restriction.p() != self.p {
            return invalid(format!(
                "restriction: {} columns do not match p = {}",
                self.restriction.p(),
                self.p
            ));
        }
        Ok(())
    }
}

/// Equal coefficients with unit Euclidean norm.
pub fn canonical_beta(p: usize) -> DVector<f64> {
    DVector::from_element(p, 1.0 / (p as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Design = 1,
    Replication = 2,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for one `(n, rho, purpose, index)` tuple.
pub fn stream_rng(master_seed: u64, n: usize, rho: f64, purpose: StreamPurpose, index: u64) -> ChaCha8Rng {
    let mut state = master_seed;
    for word in [n as u64, rho.to_bits(), purpose as u64, index] {
        let mut s = state ^ word;
        state = splitmix64(&mut s);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Collinear design. Per row, the `p` independent normals are drawn first and
/// the shared component `z_{i,p+1}` last.
pub fn generate_design<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    let own = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let shared: f64 = rng.sample(StandardNormal);
        for j in 0..p {
            x[(i, j)] = own * z[j] + rho * shared;
        }
    }
    x
}

/// `N(0, Psi)` draw through the Cholesky factor of `Psi`.
pub fn sample_disturbance<R: Rng + ?Sized>(psi_factor: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    let q = psi_factor.nrows();
    let z = DVector::from_iterator(q, (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)));
    psi_factor * z
}

pub fn sample_bernoulli<R: Rng + ?Sized>(x: &DMatrix<f64>, beta: &DVector<f64>, rng: &mut R) -> DVector<f64> {
    (x * beta).map(|eta| if rng.random::<f64>() < logistic(eta) { 1.0 } else { 0.0 })
}

/// Squared estimation errors of one replication. Entries of the `d`-dependent
/// estimators follow the order of the `d` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredErrors {
    pub mle: f64,
    pub srmle: f64,
    pub lle: Vec<f64>,
    pub aulle: Vec<f64>,
    pub sraulle: Vec<f64>,
}

impl SquaredErrors {
    pub fn get(&self, kind: EstimatorKind, d_index: usize) -> f64 {
        match kind {
            EstimatorKind::Mle => self.mle,
            EstimatorKind::Srmle => self.srmle,
            EstimatorKind::Lle => self.lle[d_index],
            EstimatorKind::Aulle => self.aulle[d_index],
            EstimatorKind::Sraulle => self.sraulle[d_index],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplicationOutcome {
    Success(SquaredErrors),
    Failed(String),
}

/// Where the restriction's right-hand side comes from in a replication.
#[derive(Debug, Clone, PartialEq)]
pub enum RestrictionDraw<'a> {
    /// `h = H beta + v`, `v ~ N(0, Psi)` drawn from the replication stream.
    Resample { psi_factor: &'a DMatrix<f64> },
    Fixed(&'a DVector<f64>),
}

/// One replication on a given design. Draws `y` first, then `v`.
pub fn simulate_replication<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    beta_true: &DVector<f64>,
    restriction: &StochasticRestriction,
    h_draw: RestrictionDraw<'_>,
    d_grid: &[f64],
    irls: &IrlsOptions,
    rng: &mut R,
) -> ReplicationOutcome {
    let y = sample_bernoulli(x, beta_true, rng);
    let h = match h_draw {
        RestrictionDraw::Resample { psi_factor } => {
            restriction.h_matrix() * beta_true + sample_disturbance(psi_factor, rng)
        }
        RestrictionDraw::Fixed(h) => h.clone(),
    };
    let data = match Dataset::new(x.clone(), y) {
        Ok(data) => data,
        Err(e) => return ReplicationOutcome::Failed(e.to_string()),
    };
    let fit = match fit_mle(&data, irls) {
        Ok(fit) if fit.converged => fit,
        Ok(fit) => return ReplicationOutcome::Failed(Error::NotConverged { iterations: fit.iterations, gradient_norm: fit.gradient_norm }.to_string()),
        Err(e) => return ReplicationOutcome::Failed(e.to_string()),
    };
    let restriction = match restriction.with_h(h) {
        Ok(r) => r,
        Err(e) => return ReplicationOutcome::Failed(e.to_string()),
    };
    let est = match point_estimates(&fit, &restriction, d_grid) {
        Ok(est) => est,
        Err(e) => return ReplicationOutcome::Failed(e.to_string()),
    };
    let se = |b: &DVector<f64>| (b - beta_true).norm_squared();
    ReplicationOutcome::Success(SquaredErrors {
        mle: se(&est.mle),
        srmle: se(&est.srmle),
        lle: est.lle.iter().map(se).collect(),
        aulle: est.aulle.iter().map(se).collect(),
        sraulle: est.sraulle.iter().map(se).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub smse: f64,
    pub mc_standard_error: f64,
    pub successes: usize,
    pub failed_replications: usize,
    pub valid: bool,
}

/// One `(estimator, n, rho, d)` cell of the result grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub rho: f64,
    pub d: f64,
    pub stats: CellStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub n_values: Vec<usize>,
    pub rho_values: Vec<f64>,
    pub d_grid: Vec<f64>,
    pub replications: usize,
    /// Ordered by `n`, then `rho`, then estimator, then `d`.
    pub cells: Vec<Cell>,
}

impl SimulationResult {
    fn offset(&self, kind: EstimatorKind, n_index: usize, rho_index: usize, d_index: usize) -> usize {
        let per_d = self.d_grid.len();
        let per_rho = per_d * EstimatorKind::ALL.len();
        let per_n = per_rho * self.rho_values.len();
        n_index * per_n + rho_index * per_rho + kind.index() * per_d + d_index
    }

    pub fn cell_by_index(&self, kind: EstimatorKind, n_index: usize, rho_index: usize, d_index: usize) -> &Cell {
        &self.cells[self.offset(kind, n_index, rho_index, d_index)]
    }

    /// Looks up a cell by value (`rho` and `d` compared exactly).
    pub fn get(&self, kind: EstimatorKind, n: usize, rho: f64, d: f64) -> Option<&CellStats> {
        let ni = self.n_values.iter().position(|v| *v == n)?;
        let ri = self.rho_values.iter().position(|v| *v == rho)?;
        let di = self.d_grid.iter().position(|v| *v == d)?;
        Some(&self.cell_by_index(kind, ni, ri, di).stats)
    }

    pub fn smse(&self, kind: EstimatorKind, n: usize, rho: f64, d: f64) -> Option<f64> {
        self.get(kind, n, rho, d).map(|s| s.smse)
    }

    /// Failed replications per `(n, rho)`.
    pub fn failures(&self) -> Vec<(usize, f64, usize)> {
        let mut out = Vec::new();
        for (ni, n) in self.n_values.iter().enumerate() {
            for (ri, rho) in self.rho_values.iter().enumerate() {
                let c = self.cell_by_index(EstimatorKind::Mle, ni, ri, 0);
                out.push((*n, *rho, c.stats.failed_replications));
            }
        }
        out
    }
}

fn summarize(values: impl Iterator<Item = f64> + Clone, successes: usize, failed: usize, replications: usize) -> CellStats {
    let valid = (failed as f64) <= MAX_FAILED_FRACTION * replications as f64 && successes > 0;
    if successes == 0 {
        return CellStats {
            smse: f64::NAN,
            mc_standard_error: f64::NAN,
            successes,
            failed_replications: failed,
            valid,
        };
    }
    let m = successes as f64;
    let mean = values.clone().sum::<f64>() / m;
    let se = if successes > 1 {
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    CellStats {
        smse: mean,
        mc_standard_error: se,
        successes,
        failed_replications: failed,
        valid,
    }
}

/// Runs every `(n, rho)` block on the current rayon pool.
pub fn run_monte_carlo(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let psi_factor = linalg::cholesky(config.restriction.psi(), "Psi")?.l();
    let blocks: Vec<(usize, f64)> = config
        .n_values
        .iter()
        .flat_map(|n| config.rho_values.iter().map(move |rho| (*n, *rho)))
        .collect();

    let mut cells = Vec::with_capacity(blocks.len() * EstimatorKind::ALL.len() * config.d_grid.len());
    for (n, rho) in blocks {
        let mut design_rng = stream_rng(config.master_seed, n, rho, StreamPurpose::Design, 0);
        let fixed_design = generate_design(n, config.p, rho, &mut design_rng);
        let fixed_h = config.fixed_h.then(|| {
            config.restriction.h_matrix() * &config.beta_true + sample_disturbance(&psi_factor, &mut design_rng)
        });

        let outcomes: Vec<ReplicationOutcome> = (0..config.replications)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream_rng(config.master_seed, n, rho, StreamPurpose::Replication, r as u64);
                let redrawn;
                let x = if config.redraw_design {
                    redrawn = generate_design(n, config.p, rho, &mut rng);
                    &redrawn
                } else {
                    &fixed_design
                };
                let h_draw = match &fixed_h {
                    Some(h) => RestrictionDraw::Fixed(h),
                    None => RestrictionDraw::Resample { psi_factor: &psi_factor },
                };
                simulate_replication(x, &config.beta_true, &config.restriction, h_draw, &config.d_grid, &config.irls, &mut rng)
            })
            .collect();

        let successes: Vec<&SquaredErrors> = outcomes
            .iter()
            .filter_map(|o| match o {
                ReplicationOutcome::Success(se) => Some(se),
                ReplicationOutcome::Failed(_) => None,
            })
            .collect();
        let failed = outcomes.len() - successes.len();

        for kind in EstimatorKind::ALL {
            for (di, d) in config.d_grid.iter().enumerate() {
                let stats = summarize(
                    successes.iter().map(|se| se.get(kind, di)),
                    successes.len(),
                    failed,
                    config.replications,
                );
                cells.push(Cell {
                    estimator: kind,
                    n,
                    rho,
                    d: *d,
                    stats,
                });
            }
        }
    }

    Ok(SimulationResult {
        n_values: config.n_values.clone(),
        rho_values: config.rho_values.clone(),
        d_grid: config.d_grid.clone(),
        replications: config.replications,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn canonical_beta_norm() {
        assert_eq!(canonical_beta(4), DVector::from_element(4, 0.5));
        assert_eq!(canonical_beta(1), DVector::from_element(1, 1.0));
        for p in 1..20 {
            assert_relative_eq!(canonical_beta(p).norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = stream_rng(1, 25, 0.9, StreamPurpose::Replication, 3).random();
        let b: u64 = stream_rng(1, 25, 0.9, StreamPurpose::Replication, 3).random();
        assert_eq!(a, b);
        let others = [
            stream_rng(2, 25, 0.9, StreamPurpose::Replication, 3),
            stream_rng(1, 50, 0.9, StreamPurpose::Replication, 3),
            stream_rng(1, 25, 0.8, StreamPurpose::Replication, 3),
            stream_rng(1, 25, 0.9, StreamPurpose::Design, 3),
            stream_rng(1, 25, 0.9, StreamPurpose::Replication, 4),
        ];
        for mut rng in others {
            assert_ne!(a, rng.random::<u64>());
        }
    }

    #[test]
    fn config_validation_names_fields() {
        let cases = [
            (SimulationConfig { replications: 0, ..SimulationConfig::default() }, "replications"),
            (SimulationConfig { rho_values: vec![1.0], ..SimulationConfig::default() }, "rho_values"),
            (SimulationConfig { d_grid: vec![0.0], ..SimulationConfig::default() }, "d_grid"),
            (SimulationConfig { n_values: vec![4], ..SimulationConfig::default() }, "n_values"),
        ];
        for (config, field) in cases {
            assert!(config.validate().unwrap_err().to_string().contains(field), "{field}");
        }
        assert!(SimulationConfig::default().validate().is_ok());
    }

    #[test]
    fn summarize_single_value() {
        let s = summarize([2.5].into_iter(), 1, 0, 1);
        assert_eq!(s.smse, 2.5);
        assert_eq!(s.mc_standard_error, 0.0);
        assert!(s.valid);
        let s = summarize([].into_iter(), 0, 3, 3);
        assert!(!s.valid);
    }
}
