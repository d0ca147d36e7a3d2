//! Test-only oracles and random instance generators. Nothing here calls the
//! estimator code paths it is used to check.
#![allow(dead_code)]

use liu_logit::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// `A A' / p + floor I`: SPD with condition number typically below 1e3.
pub fn random_spd(rng: &mut ChaCha8Rng, p: usize, floor: f64) -> DMatrix<f64> {
    let a = normal_matrix(rng, p, p);
    let m = &a * a.transpose() / p as f64 + DMatrix::identity(p, p) * floor;
    (&m + m.transpose()) * 0.5
}

/// Bernoulli log-likelihood evaluated directly from its definition.
pub fn log_likelihood(x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for i in 0..x.nrows() {
        let eta: f64 = (0..x.ncols()).map(|j| x[(i, j)] * beta[j]).sum();
        // log(1 + e^eta) without overflow
        let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
        ll += y[i] * eta - softplus;
    }
    ll
}

/// Minimizes `f` with Nelder-Mead from `start` with initial simplex size `step`.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], step: f64, iters: usize) -> Vec<f64> {
    let p = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for j in 0..p {
        let mut v = start.to_vec();
        v[j] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..iters {
        let mut order: Vec<usize> = (0..=p).collect();
        order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
        simplex = order.iter().map(|i| simplex[*i].clone()).collect();
        values = order.iter().map(|i| values[*i]).collect();
        let spread = simplex
            .iter()
            .skip(1)
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread < 1e-12 {
            break;
        }
        let centroid: Vec<f64> = (0..p)
            .map(|j| simplex[..p].iter().map(|v| v[j]).sum::<f64>() / p as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..p).map(|j| centroid[j] + t * (simplex[p][j] - centroid[j])).collect()
        };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[p] = expanded;
                values[p] = fe;
            } else {
                simplex[p] = reflected;
                values[p] = fr;
            }
        } else if fr < values[p - 1] {
            simplex[p] = reflected;
            values[p] = fr;
        } else {
            let contracted = if fr < values[p] { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            if fc < values[p].min(fr) {
                simplex[p] = contracted;
                values[p] = fc;
            } else {
                let best = simplex[0].clone();
                for k in 1..=p {
                    simplex[k] = best.iter().zip(&simplex[k]).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    values[k] = f(&simplex[k]);
                }
            }
        }
    }
    let best = (0..=p).min_by(|a, b| values[*a].total_cmp(&values[*b])).unwrap();
    simplex[best].clone()
}

/// Brute-force MLE: coarse grid over `[-bound, bound]^p`, then repeated
/// Nelder-Mead restarts with shrinking simplices.
pub fn brute_force_mle(x: &DMatrix<f64>, y: &DVector<f64>, bound: f64, grid_steps: usize) -> Vec<f64> {
    let p = x.ncols();
    let neg_ll = |b: &[f64]| -log_likelihood(x, y, b);
    let mut best = vec![0.0; p];
    let mut best_val = neg_ll(&best);
    let total = (grid_steps + 1).pow(p as u32);
    let h = 2.0 * bound / grid_steps as f64;
    for idx in 0..total {
        let mut rem = idx;
        let point: Vec<f64> = (0..p)
            .map(|_| {
                let k = rem % (grid_steps + 1);
                rem /= grid_steps + 1;
                -bound + k as f64 * h
            })
            .collect();
        let v = neg_ll(&point);
        if v < best_val {
            best_val = v;
            best = point;
        }
    }
    let mut step = h;
    for _ in 0..8 {
        best = nelder_mead(&neg_ll, &best, step, 5000);
        step *= 0.1;
    }
    best
}

/// Filter matrices through the eigen-decomposition of `C`, one scalar
/// function of each eigenvalue.
pub fn spectral_filter(c: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(c.clone());
    let q = &eig.eigenvectors;
    let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    q * diag * q.transpose()
}

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Small logistic dataset with `n` rows and `p` standard normal predictors.
pub fn logistic_sample(seed: u64, n: usize, beta: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let mut r = rng(seed);
    let p = beta.len();
    let x = normal_matrix(&mut r, n, p);
    let y = DVector::from_fn(n, |i, _| {
        let eta: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
        let pi = 1.0 / (1.0 + (-eta).exp());
        if r.random::<f64>() < pi { 1.0 } else { 0.0 }
    });
    (x, y)
}
