//! Regenerates `data/synthetic_rho099.csv`: 100 rows, four predictors drawn
//! with pairwise population correlation 0.99^2 and a logistic response with
//! equal unit-norm coefficients. Synthetic data, not a real survey sample.
//!
//! cargo run -p liu-logit-cli --example generate_fixture > crates/cli/data/synthetic_rho099.csv

use liu_logit::simulation::{generate_design, sample_bernoulli};
use liu_logit::canonical_beta;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2017;
const ROWS: usize = 100;
const PREDICTORS: usize = 4;
const RHO: f64 = 0.99;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let x = generate_design(ROWS, PREDICTORS, RHO, &mut rng);
    let y = sample_bernoulli(&x, &canonical_beta(PREDICTORS), &mut rng);
    println!("x1,x2,x3,x4,y");
    for i in 0..ROWS {
        let row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        println!("{},{}", row.join(","), y[i]);
    }
}
