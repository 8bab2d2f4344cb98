//! Pareto-smoothed importance sampling LOO for models given as posterior
//! log-likelihood draws.

use rayon::prelude::*;
use serde::Serialize;

use super::gpd::{gpd_fit, gpd_quantile};
use super::{elpd_from_pointwise, ElpdEstimate};
use crate::error::{Error, Result};

pub const MIN_DRAWS: usize = 100;
pub const DEFAULT_KHAT_THRESHOLD: f64 = 0.7;

/// `S × n` matrix of `log p(y_i | θ^(s))`, row-major by draw.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikDraws {
    draws: usize,
    observations: usize,
    values: Vec<f64>,
}

impl LogLikDraws {
    pub fn new(draws: usize, observations: usize, values: Vec<f64>) -> Result<Self> {
        if draws < MIN_DRAWS {
            return Err(Error::TooFewDraws {
                required: MIN_DRAWS,
                actual: draws,
            });
        }
        if observations == 0 {
            return Err(Error::TooFewObservations {
                required: 1,
                actual: 0,
            });
        }
        if values.len() != draws * observations {
            return Err(Error::LengthMismatch(values.len(), draws * observations));
        }
        if let Some((idx, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!(
                    "draw {}, observation {}",
                    idx / observations,
                    idx % observations
                ),
                value: v,
            });
        }
        Ok(Self {
            draws,
            observations,
            values,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let draws = rows.len();
        let observations = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != observations) {
            return Err(Error::LengthMismatch(bad.len(), observations));
        }
        Self::new(draws, observations, rows.into_iter().flatten().collect())
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn get(&self, draw: usize, obs: usize) -> f64 {
        self.values[draw * self.observations + obs]
    }

    pub fn row(&self, draw: usize) -> &[f64] {
        &self.values[draw * self.observations..(draw + 1) * self.observations]
    }

    pub fn column(&self, obs: usize) -> Vec<f64> {
        (0..self.draws).map(|s| self.get(s, obs)).collect()
    }
}

/// Per-observation tail-shape estimates and the observations flagged as
/// unreliable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoDiagnostics {
    /// `-inf` marks an observation whose ratios were all equal (no fit).
    pub khat: Vec<f64>,
    pub flagged: Vec<usize>,
    pub threshold: f64,
}

impl ParetoDiagnostics {
    pub fn new(khat: Vec<f64>, threshold: f64) -> Self {
        let flagged = khat
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > threshold)
            .map(|(i, _)| i)
            .collect();
        Self {
            khat,
            flagged,
            threshold,
        }
    }

    pub fn max_khat(&self) -> f64 {
        self.khat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsisOptions {
    pub khat_threshold: f64,
}

impl Default for PsisOptions {
    fn default() -> Self {
        Self {
            khat_threshold: DEFAULT_KHAT_THRESHOLD,
        }
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Number of draws in the smoothed tail.
fn tail_len(draws: usize) -> usize {
    let s = draws as f64;
    (0.2 * s).min(3.0 * s.sqrt()).ceil() as usize
}

/// Pareto-smooths one vector of log importance ratios.
///
/// Returns log weights (normalised so the largest raw ratio is 1) and the
/// estimated tail shape. The largest `M` ratios are replaced by expected order
/// statistics of the fitted generalized Pareto tail and truncated at the raw
/// maximum. All-equal ratios give `k = -inf` and unsmoothed weights.
pub fn psis_smooth(log_ratios: &[f64]) -> (Vec<f64>, f64) {
    let s = log_ratios.len();
    let max = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lw: Vec<f64> = log_ratios.iter().map(|r| r - max).collect();
    if lw.iter().all(|&v| v == 0.0) {
        return (lw, f64::NEG_INFINITY);
    }

    let m = tail_len(s).min(s - 1);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| lw[a].total_cmp(&lw[b]).then(a.cmp(&b)));
    let tail_idx = &order[s - m..];
    let cutoff = lw[order[s - m - 1]];
    let exp_cutoff = cutoff.exp();
    let tail: Vec<f64> = tail_idx
        .iter()
        .map(|&i| (lw[i].exp() - exp_cutoff).max(0.0))
        .collect();

    let fit = match gpd_fit(&tail) {
        Ok(fit) => fit,
        Err(_) => return (lw, f64::NEG_INFINITY),
    };
    // weakly informative prior pulling the shape towards 0.5
    let k = (m as f64 * fit.k + 10.0 * 0.5) / (m as f64 + 10.0);
    if !k.is_finite() {
        return (lw, f64::INFINITY);
    }
    for (j, &i) in tail_idx.iter().enumerate() {
        let p = (j as f64 + 0.5) / m as f64;
        let smoothed = (exp_cutoff + gpd_quantile(p, k, fit.sigma)).ln();
        lw[i] = smoothed.min(0.0);
    }
    (lw, k)
}

pub fn psis_loo(draws: &LogLikDraws) -> Result<(ElpdEstimate, ParetoDiagnostics)> {
    psis_loo_with(draws, &PsisOptions::default())
}

pub fn psis_loo_with(
    draws: &LogLikDraws,
    options: &PsisOptions,
) -> Result<(ElpdEstimate, ParetoDiagnostics)> {
    if draws.draws < MIN_DRAWS {
        return Err(Error::TooFewDraws {
            required: MIN_DRAWS,
            actual: draws.draws,
        });
    }
    let per_obs: Vec<(f64, f64)> = (0..draws.observations)
        .into_par_iter()
        .map(|i| {
            let loglik = draws.column(i);
            let log_ratios: Vec<f64> = loglik.iter().map(|l| -l).collect();
            let (lw, k) = psis_smooth(&log_ratios);
            let num = log_sum_exp(lw.iter().zip(&loglik).map(|(w, l)| w + l));
            let den = log_sum_exp(lw.iter().copied());
            (num - den, k)
        })
        .collect();
    let (pointwise, khat): (Vec<f64>, Vec<f64>) = per_obs.into_iter().unzip();
    let estimate = if pointwise.len() >= 2 {
        elpd_from_pointwise(&pointwise)?
    } else {
        ElpdEstimate {
            elpd: pointwise.iter().sum(),
            se: 0.0,
            pointwise,
        }
    };
    Ok((
        estimate,
        ParetoDiagnostics::new(khat, options.khat_threshold),
    ))
}
