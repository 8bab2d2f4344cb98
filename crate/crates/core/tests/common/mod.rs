//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use loo_lab::models::ModelSpec;

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Trapezoid rule for `exp(f)` on an equispaced grid, returned on the log scale.
fn log_trapezoid(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / (points - 1) as f64;
    let logs: Vec<f64> = (0..points).map(|j| f(lo + h * j as f64)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let terms = logs.iter().enumerate().map(|(j, l)| {
        let w = if j == 0 || j == points - 1 { 0.5 } else { 1.0 };
        w * (l - max).exp()
    });
    max + (h * compensated_sum(terms)).ln()
}

/// `ln σ(u)` without overflow for large `|u|`.
fn log_sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        -(-u).exp().ln_1p()
    } else {
        u - u.exp().ln_1p()
    }
}

/// `ln ∫ θ^α (1-θ)^β dθ` by the trapezoid rule on the logit scale, where the
/// integrand is smooth and decays exponentially for `α, β > 0`.
fn log_beta_integral(alpha: f64, beta: f64) -> f64 {
    // θ = σ(u), dθ = σ(u) σ(-u) du
    log_trapezoid(-90.0, 90.0, 30_001, |u| {
        (alpha + 1.0) * log_sigmoid(u) + (beta + 1.0) * log_sigmoid(-u)
    })
}

/// Log-likelihood of the data under a normal mean `mu`, written from sufficient statistics.
fn normal_loglik(sum: f64, sum_sq: f64, m: f64, mu: f64, sigma: f64) -> f64 {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    -(sum_sq - 2.0 * mu * sum + m * mu * mu) / (2.0 * sigma * sigma)
        - m * (sigma.ln() + 0.5 * ln_2pi)
}

fn normal_logpdf(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// `ln p(y_new | data)` by quadrature over the parameter, as a ratio of two
/// integrals of prior × likelihood.
pub fn quadrature_predictive(model: &ModelSpec, data: &[f64], y_new: f64) -> f64 {
    match *model {
        ModelSpec::BetaBernoulli { a, b } => {
            let s: f64 = data.iter().sum();
            let f = data.len() as f64 - s;
            // the prior's normalising constant cancels in the ratio
            let num = log_beta_integral(a - 1.0 + s + y_new, b - 1.0 + f + 1.0 - y_new);
            let den = log_beta_integral(a - 1.0 + s, b - 1.0 + f);
            num - den
        }
        ModelSpec::NormalConjugate { mu0, tau0, sigma } => {
            let m = data.len() as f64;
            let sum: f64 = data.iter().sum();
            let sum_sq: f64 = data.iter().map(|y| y * y).sum();
            let log_post =
                |mu: f64| normal_logpdf(mu, mu0, tau0) + normal_loglik(sum, sum_sq, m, mu, sigma);
            // locate the bulk on a coarse grid, then integrate finely around it
            let span = data
                .iter()
                .chain([mu0, y_new].iter())
                .fold(0.0f64, |acc, v| acc.max(v.abs()));
            let lo = -span - 20.0 * (sigma + tau0);
            let hi = span + 20.0 * (sigma + tau0);
            let coarse = 20_001;
            let h = (hi - lo) / (coarse - 1) as f64;
            let mode = (0..coarse)
                .map(|j| lo + h * j as f64)
                .max_by(|x, y| log_post(*x).total_cmp(&log_post(*y)))
                .unwrap();
            let width = 40.0 * sigma / (m + 1.0).sqrt() + 40.0 * h;
            let width = width.min(40.0 * tau0 + 40.0 * h);
            let (lo, hi) = (mode - width, mode + width);
            let num = log_trapezoid(lo, hi, 40_001, |mu| {
                log_post(mu) + normal_logpdf(y_new, mu, sigma)
            });
            let den = log_trapezoid(lo, hi, 40_001, log_post);
            num - den
        }
        ModelSpec::BernoulliPoint { theta0 } => {
            if y_new == 1.0 {
                theta0.ln()
            } else {
                (1.0 - theta0).ln()
            }
        }
        ModelSpec::NormalPoint { mu0, sigma } => normal_logpdf(y_new, mu0, sigma),
    }
}

/// Leave-one-out log predictive densities by quadrature.
pub fn quadrature_loo(model: &ModelSpec, data: &[f64]) -> Vec<f64> {
    (0..data.len())
        .map(|i| {
            let rest: Vec<f64> = data
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .collect();
            quadrature_predictive(model, &rest, data[i])
        })
        .collect()
}

/// Log marginal likelihood through the chain rule `Σ ln p(y_i | y_<i)`.
pub fn chain_rule_marginal(model: &ModelSpec, data: &[f64]) -> f64 {
    compensated_sum((0..data.len()).map(|i| quadrature_predictive(model, &data[..i], data[i])))
}

/// `Σ_i ln Σ_k w_k exp(lpd_ik)` with compensated summation.
pub fn reference_stacking_objective(weights: &[f64], rows: &[Vec<f64>]) -> f64 {
    compensated_sum(rows.iter().map(|row| {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inner = compensated_sum(
            row.iter()
                .zip(weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(l, w)| w * (l - max).exp()),
        );
        max + inner.ln()
    }))
}

/// Best stacking objective over the simplex grid with the given step (K = 2 or 3).
pub fn grid_search_stacking(rows: &[Vec<f64>], step: f64) -> (Vec<f64>, f64) {
    let k = rows[0].len();
    let m = (1.0 / step).round() as usize;
    let scaled: Vec<(f64, Vec<f64>)> = rows
        .iter()
        .map(|row| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (max, row.iter().map(|l| (l - max).exp()).collect())
        })
        .collect();
    let offset: f64 = scaled.iter().map(|(m, _)| m).sum();
    let eval = |w: &[f64]| -> f64 {
        offset
            + scaled
                .iter()
                .map(|(_, e)| e.iter().zip(w).map(|(e, w)| e * w).sum::<f64>().ln())
                .sum::<f64>()
    };
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut consider = |w: Vec<f64>| {
        let v = eval(&w);
        if v > best.1 {
            best = (w, v);
        }
    };
    match k {
        2 => {
            for i in 0..=m {
                let w0 = i as f64 / m as f64;
                consider(vec![w0, 1.0 - w0]);
            }
        }
        3 => {
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let w0 = i as f64 / m as f64;
                    let w1 = j as f64 / m as f64;
                    consider(vec![w0, w1, (1.0 - w0 - w1).max(0.0)]);
                }
            }
        }
        _ => panic!("grid search supports K = 2 or 3"),
    }
    best
}

/// Log-likelihood draws `S × n` (row-major by draw) for a conjugate model.
pub fn loglik_draws(model: &ModelSpec, data: &[f64], thetas: &[f64]) -> Vec<f64> {
    thetas
        .iter()
        .flat_map(|&t| {
            data.iter()
                .map(move |&y| loo_lab::models::log_likelihood(model, y, t))
        })
        .collect()
}
