//! Model weights from pointwise LOO predictive densities.
//!
//! All schemes consume a [`PointwiseMatrix`] whose entry `(i, k)` is
//! `log p(y_i | y_{-i}, M_k)`, except [`bma`], which works from marginal
//! likelihoods. Every scheme returns a [`WeightVector`] on the simplex.

mod stacking;

pub use stacking::{stacking, stacking_objective, stacking_with, StackingOptions};

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loo::sample_variance;
use crate::rng::stream_rng;

pub const DEFAULT_BOOTSTRAP_DRAWS: usize = 1000;
pub const MIN_BOOTSTRAP_DRAWS: usize = 100;

/// `n × K` matrix of leave-one-out log predictive densities, one column per model.
///
/// Entries are finite, except that matrices built with
/// [`PointwiseMatrix::with_impossible`] may hold `-inf` for observations a
/// model rules out (each row still needs one finite entry).
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    labels: Vec<String>,
}

impl PointwiseMatrix {
    /// Builds a matrix from observation rows; all entries must be finite.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let m = Self::build(rows, labels)?;
        if let Some((idx, &v)) = m.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("row {}, column {}", idx / m.cols, idx % m.cols),
                value: v,
            });
        }
        Ok(m)
    }

    /// Like [`PointwiseMatrix::new`] but admits `-inf` entries.
    pub fn with_impossible(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let m = Self::build(rows, labels)?;
        if let Some((idx, &v)) = m
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_nan() || **v == f64::INFINITY)
        {
            return Err(Error::NonFinite {
                location: format!("row {}, column {}", idx / m.cols, idx % m.cols),
                value: v,
            });
        }
        for i in 0..m.rows {
            if m.row(i).iter().all(|v| !v.is_finite()) {
                return Err(Error::AllImpossible(format!(
                    "row {i} is impossible under every model"
                )));
            }
        }
        Ok(m)
    }

    /// Builds a matrix from per-model columns.
    pub fn from_columns(columns: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        Self::new(transpose(columns)?, labels)
    }

    pub fn from_columns_with_impossible(
        columns: Vec<Vec<f64>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        Self::with_impossible(transpose(columns)?, labels)
    }

    fn build(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let n = rows.len();
        let k = labels.len();
        if k < 2 {
            return Err(Error::InvalidArgument(format!(
                "at least 2 models are required, got {k}"
            )));
        }
        if n < 2 {
            return Err(Error::TooFewObservations {
                required: 2,
                actual: n,
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate model label {label:?}"
                )));
            }
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::LengthMismatch(bad.len(), k));
        }
        Ok(Self {
            rows: n,
            cols: k,
            values: rows.into_iter().flatten().collect(),
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.cols + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, k)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Sample variance of column `k`; exactly zero for a constant column.
    pub fn column_variance(&self, k: usize) -> f64 {
        sample_variance(&self.column(k))
    }

    fn require_finite(&self) -> Result<()> {
        if let Some((idx, &v)) = self.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("row {}, column {}", idx / self.cols, idx % self.cols),
                value: v,
            });
        }
        Ok(())
    }

    /// Row-weighted mean of each column (uniform when `row_weights` is None),
    /// mean deviation. Constant columns give back the first row exactly.
    fn weighted_column_means(&self, row_weights: Option<&[f64]>) -> Vec<f64> {
        let first = self.row(0);
        let mut dev = vec![0.0; self.cols];
        for i in 0..self.rows {
            let w = row_weights.map_or(1.0 / self.rows as f64, |w| w[i]);
            for (k, d) in dev.iter_mut().enumerate() {
                *d += w * (self.get(i, k) - first[k]);
            }
        }
        first.iter().zip(dev).map(|(f, d)| f + d).collect()
    }
}

fn transpose(columns: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let n = columns.first().map_or(0, Vec::len);
    if let Some(bad) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch(bad.len(), n));
    }
    Ok((0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    PseudoBma,
    PseudoBmaPlus,
    Stacking,
    Bma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::PseudoBma,
        Scheme::PseudoBmaPlus,
        Scheme::Stacking,
        Scheme::Bma,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::PseudoBma => "pseudo-bma",
            Scheme::PseudoBmaPlus => "pseudo-bma-plus",
            Scheme::Stacking => "stacking",
            Scheme::Bma => "bma",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "pseudo-bma" => Ok(Scheme::PseudoBma),
            "pseudo-bma-plus" | "pseudo-bma+" => Ok(Scheme::PseudoBmaPlus),
            "stacking" => Ok(Scheme::Stacking),
            "bma" => Ok(Scheme::Bma),
            other => Err(Error::InvalidArgument(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    None,
    Stacking {
        iterations: usize,
        converged: bool,
        kkt_residual: f64,
        objective: f64,
    },
    Bootstrap {
        draws: usize,
        /// Monte Carlo standard error of each averaged weight.
        mc_se: Vec<f64>,
    },
}

/// Nonnegative weights summing to one, tagged with the scheme that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub scheme: Scheme,
    pub diagnostics: Diagnostics,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>, scheme: Scheme, diagnostics: Diagnostics) -> Self {
        Self {
            weights,
            scheme,
            diagnostics,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Sum to one within `tol`, no negative entries.
    pub fn is_simplex(&self, tol: f64) -> bool {
        self.weights.iter().all(|&w| w >= 0.0 && w.is_finite())
            && (self.weights.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

pub(crate) fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Softmax of `x`; `-inf` entries get weight zero.
pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    normalize(x.iter().map(|v| (v - max).exp()).collect())
}

/// Weights proportional to `exp(elpd_k)`.
pub fn pseudo_bma(matrix: &PointwiseMatrix) -> Result<WeightVector> {
    matrix.require_finite()?;
    let n = matrix.n() as f64;
    let elpd: Vec<f64> = matrix
        .weighted_column_means(None)
        .into_iter()
        .map(|m| n * m)
        .collect();
    Ok(WeightVector::new(
        softmax(&elpd),
        Scheme::PseudoBma,
        Diagnostics::None,
    ))
}

/// Pseudo-BMA with Bayesian-bootstrap regularisation.
///
/// Replicate `b` draws Dirichlet(1, …, 1) observation weights `ω` from stream
/// `b` of `seed`, forms `n · Σ_i ω_i · matrix(i, k)` and takes its softmax;
/// the result is the average softmax over `bootstrap_draws` replicates. When
/// every column is constant this equals [`pseudo_bma`] for any seed.
pub fn pseudo_bma_plus(
    matrix: &PointwiseMatrix,
    bootstrap_draws: usize,
    seed: u64,
) -> Result<WeightVector> {
    if bootstrap_draws < MIN_BOOTSTRAP_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_BOOTSTRAP_DRAWS} bootstrap draws, got {bootstrap_draws}"
        )));
    }
    matrix.require_finite()?;
    let n = matrix.n();
    let k = matrix.k();

    let replicates: Vec<Vec<f64>> = (0..bootstrap_draws as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let gamma: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let omega = normalize(gamma);
            let elpd: Vec<f64> = matrix
                .weighted_column_means(Some(&omega))
                .into_iter()
                .map(|m| n as f64 * m)
                .collect();
            softmax(&elpd)
        })
        .collect();

    // Welford running mean: a run of identical replicates averages to itself exactly.
    let mut mean = vec![0.0; k];
    let mut m2 = vec![0.0; k];
    for (count, rep) in replicates.iter().enumerate() {
        let c = (count + 1) as f64;
        for j in 0..k {
            let delta = rep[j] - mean[j];
            mean[j] += delta / c;
            m2[j] += delta * (rep[j] - mean[j]);
        }
    }
    let b = bootstrap_draws as f64;
    let mc_se = m2
        .iter()
        .map(|s| (s / (b - 1.0)).sqrt() / b.sqrt())
        .collect();
    Ok(WeightVector::new(
        normalize(mean),
        Scheme::PseudoBmaPlus,
        Diagnostics::Bootstrap {
            draws: bootstrap_draws,
            mc_se,
        },
    ))
}

/// Bayesian model averaging weights `∝ prior_k · exp(log_marginal_k)`.
pub fn bma(log_marginals: &[f64], prior_probs: &[f64]) -> Result<WeightVector> {
    if log_marginals.len() != prior_probs.len() {
        return Err(Error::LengthMismatch(
            log_marginals.len(),
            prior_probs.len(),
        ));
    }
    if log_marginals.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least 2 models are required".into(),
        ));
    }
    if prior_probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
        || (prior_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidArgument(format!(
            "prior probabilities must lie on the simplex, got {prior_probs:?}"
        )));
    }
    if let Some(bad) = log_marginals
        .iter()
        .find(|v| v.is_nan() || **v == f64::INFINITY)
    {
        return Err(Error::NonFinite {
            location: "log marginal likelihood".into(),
            value: *bad,
        });
    }
    let log_post: Vec<f64> = log_marginals
        .iter()
        .zip(prior_probs)
        .map(|(&m, &p)| {
            if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                m + p.ln()
            }
        })
        .collect();
    if log_post.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::AllImpossible(
            "every model with positive prior probability has zero marginal likelihood".into(),
        ));
    }
    Ok(WeightVector::new(
        softmax(&log_post),
        Scheme::Bma,
        Diagnostics::None,
    ))
}

/// Uniform prior over `k` models.
pub fn uniform_prior(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}
