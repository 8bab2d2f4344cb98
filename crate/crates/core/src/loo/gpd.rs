//! Generalized Pareto tail fit.
//!
//! Empirical-Bayes profile-likelihood estimate in the style of Zhang and
//! Stephens: the shape is profiled out for a fixed grid of candidate values of
//! `θ = -k/σ`, and the estimate is the posterior-mean θ under that grid.
//! Shape `k > 0` means a heavy tail.

use crate::error::{Error, Result};

const MIN_TAIL: usize = 5;
const MIN_GRID_POINTS: usize = 30;
const GRID_PRIOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdFit {
    /// Shape.
    pub k: f64,
    /// Scale.
    pub sigma: f64,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Fits a generalized Pareto distribution to exceedances sorted ascending.
pub fn gpd_fit(tail: &[f64]) -> Result<GpdFit> {
    let n = tail.len();
    if n < MIN_TAIL {
        return Err(Error::DegenerateFit(format!(
            "need at least {MIN_TAIL} exceedances, got {n}"
        )));
    }
    if tail.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::DegenerateFit(
            "exceedances must be finite and >= 0".into(),
        ));
    }
    if tail.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "exceedances must be sorted ascending".into(),
        ));
    }
    let x_max = tail[n - 1];
    if tail[0] == x_max {
        return Err(Error::DegenerateFit("all exceedances are equal".into()));
    }

    // first quartile; fall back to the smallest positive value when it is zero
    let mut x_star = tail[((n as f64) / 4.0 + 0.5).floor() as usize - 1];
    if x_star <= 0.0 {
        x_star = tail.iter().copied().find(|&x| x > 0.0).unwrap_or(x_max);
    }

    let grid_len = MIN_GRID_POINTS + (n as f64).sqrt().floor() as usize;
    let theta: Vec<f64> = (1..=grid_len)
        .map(|j| {
            1.0 / x_max + (1.0 - (grid_len as f64 / (j as f64 - 0.5)).sqrt()) / GRID_PRIOR / x_star
        })
        .collect();

    let profile: Vec<f64> = theta
        .iter()
        .map(|&t| {
            let k = tail.iter().map(|&x| (-t * x).ln_1p()).sum::<f64>() / n as f64;
            n as f64 * ((-t / k).ln() - k - 1.0)
        })
        .collect();
    // grid points with an undefined profile (k = 0 at θ = 0) carry no weight
    let profile: Vec<f64> = profile
        .into_iter()
        .map(|l| if l.is_nan() { f64::NEG_INFINITY } else { l })
        .collect();
    let norm = log_sum_exp(&profile);
    if !norm.is_finite() {
        return Err(Error::DegenerateFit(
            "profile likelihood is not finite".into(),
        ));
    }
    let theta_hat: f64 = theta
        .iter()
        .zip(&profile)
        .map(|(t, l)| t * (l - norm).exp())
        .sum();

    let k = tail.iter().map(|&x| (-theta_hat * x).ln_1p()).sum::<f64>() / n as f64;
    let sigma = -k / theta_hat;
    if !k.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::DegenerateFit(format!(
            "fit produced k={k}, sigma={sigma}"
        )));
    }
    Ok(GpdFit { k, sigma })
}

/// Quantile function of the generalized Pareto distribution with location 0.
pub fn gpd_quantile(p: f64, k: f64, sigma: f64) -> f64 {
    if k.abs() < 1e-12 {
        -sigma * (-p).ln_1p()
    } else {
        sigma * ((-k * (-p).ln_1p()).exp_m1()) / k
    }
}
