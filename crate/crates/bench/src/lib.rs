//! Shared inputs for the benchmarks.

use liu_logit::simulation::{generate_design, sample_bernoulli};
use liu_logit::{canonical_beta, fit_mle, Dataset, IrlsOptions, MleFit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Collinear logistic dataset with `p` predictors. Redraws until the sample
/// admits a finite MLE.
pub fn collinear_dataset(n: usize, p: usize, rho: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let x = generate_design(n, p, rho, &mut rng);
        let y = sample_bernoulli(&x, &canonical_beta(p), &mut rng);
        if let Ok(data) = Dataset::new(x, y) {
            if fit_mle(&data, &IrlsOptions::default()).is_ok_and(|f| f.converged) {
                return data;
            }
        }
    }
}

pub fn converged_fit(data: &Dataset) -> MleFit {
    fit_mle(data, &IrlsOptions::default()).expect("benchmark data admit a finite MLE")
}
