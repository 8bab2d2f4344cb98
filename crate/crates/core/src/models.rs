//! Conjugate model families with closed-form leave-one-out predictives,
//! marginal likelihoods and posterior predictives, plus the data generators
//! used by the experiments.
//!
//! Bernoulli data are coded as `0.0` / `1.0`. A point-mass Bernoulli model at
//! θ₀ ∈ {0, 1} assigns probability zero to the contradicting outcome; those
//! cases produce `f64::NEG_INFINITY` log densities rather than errors, using the
//! convention `0 · log 0 = 0` for the outcomes it does predict.
//!
//! The normal families use a known observation scale σ. The normal pair
//! (point mass at μ₀ against a conjugate normal prior centred on μ₀) is a
//! reconstruction of the third idealized example: with all-zero data and
//! μ₀ = 0 both models have constant leave-one-out densities.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A conjugate Bayesian model with its prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Bernoulli likelihood with θ fixed at `theta0 ∈ [0, 1]`.
    BernoulliPoint { theta0: f64 },
    /// Bernoulli likelihood with θ ~ Beta(a, b).
    BetaBernoulli { a: f64, b: f64 },
    /// Normal likelihood with mean fixed at `mu0` and known sd `sigma`.
    NormalPoint { mu0: f64, sigma: f64 },
    /// Normal likelihood with known sd `sigma` and mean ~ N(mu0, tau0²).
    NormalConjugate { mu0: f64, tau0: f64, sigma: f64 },
}

impl ModelSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            ModelSpec::BernoulliPoint { .. } => "BernoulliPoint",
            ModelSpec::BetaBernoulli { .. } => "BetaBernoulli",
            ModelSpec::NormalPoint { .. } => "NormalPoint",
            ModelSpec::NormalConjugate { .. } => "NormalConjugate",
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(
            self,
            ModelSpec::BernoulliPoint { .. } | ModelSpec::BetaBernoulli { .. }
        )
    }

    /// Checks hyperparameters against their domains.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        }
        match *self {
            ModelSpec::BernoulliPoint { theta0 } => {
                if (0.0..=1.0).contains(&theta0) {
                    Ok(())
                } else {
                    Err(Error::InvalidModel(format!(
                        "theta0 must lie in [0, 1], got {theta0}"
                    )))
                }
            }
            ModelSpec::BetaBernoulli { a, b } => {
                positive("a", a)?;
                positive("b", b)
            }
            ModelSpec::NormalPoint { mu0, sigma } => {
                if !mu0.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "mu0 must be finite, got {mu0}"
                    )));
                }
                positive("sigma", sigma)
            }
            ModelSpec::NormalConjugate { mu0, tau0, sigma } => {
                if !mu0.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "mu0 must be finite, got {mu0}"
                    )));
                }
                positive("tau0", tau0)?;
                positive("sigma", sigma)
            }
        }
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        self.validate()?;
        for (index, &value) in data.values.iter().enumerate() {
            let ok = if self.is_bernoulli() {
                value == 0.0 || value == 1.0
            } else {
                value.is_finite()
            };
            if !ok {
                return Err(Error::DomainMismatch {
                    family: self.family_name(),
                    index,
                    value,
                });
            }
        }
        Ok(())
    }

    fn check_observation(&self, y: f64) -> Result<()> {
        let ok = if self.is_bernoulli() {
            y == 0.0 || y == 1.0
        } else {
            y.is_finite()
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainMismatch {
                family: self.family_name(),
                index: 0,
                value: y,
            })
        }
    }
}

/// An ordered sequence of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `n` observations.
    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset::new(self.values[..n.min(self.values.len())].to_vec())
    }

    fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

impl From<Vec<f64>> for Dataset {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// log of `p^y (1-p)^(1-y)` with `0 · log 0 = 0`.
fn bernoulli_logpmf(y: f64, p: f64) -> f64 {
    if y == 1.0 {
        p.ln()
    } else {
        (1.0 - p).ln()
    }
}

fn normal_logpdf(y: f64, mean: f64, var: f64) -> f64 {
    let z = y - mean;
    -0.5 * (LN_2PI + var.ln() + z * z / var)
}

/// Posterior mean and variance of the normal mean after `count` observations
/// summing to `total`.
fn normal_posterior(mu0: f64, tau0: f64, sigma: f64, count: f64, total: f64) -> (f64, f64) {
    let prior_prec = 1.0 / (tau0 * tau0);
    let like_prec = 1.0 / (sigma * sigma);
    let prec = prior_prec + count * like_prec;
    let mean = (mu0 * prior_prec + total * like_prec) / prec;
    (mean, 1.0 / prec)
}

/// Leave-one-out log predictive densities `log p(y_i | y_{-i})`, in closed form.
pub fn exact_loo_pointwise(model: &ModelSpec, data: &Dataset) -> Result<Vec<f64>> {
    model.check_data(data)?;
    let n = data.len();
    if n < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            actual: n,
        });
    }
    let nf = n as f64;
    let out = match *model {
        ModelSpec::BernoulliPoint { theta0 } => data
            .values
            .iter()
            .map(|&y| bernoulli_logpmf(y, theta0))
            .collect(),
        ModelSpec::BetaBernoulli { a, b } => {
            let successes = data.sum();
            let denom = a + b + (nf - 1.0);
            data.values
                .iter()
                .map(|&y| {
                    // successes and failures among the other n - 1 points
                    let s_rest = successes - y;
                    let f_rest = (nf - 1.0) - s_rest;
                    if y == 1.0 {
                        ((a + s_rest) / denom).ln()
                    } else {
                        ((b + f_rest) / denom).ln()
                    }
                })
                .collect()
        }
        ModelSpec::NormalPoint { mu0, sigma } => data
            .values
            .iter()
            .map(|&y| normal_logpdf(y, mu0, sigma * sigma))
            .collect(),
        ModelSpec::NormalConjugate { mu0, tau0, sigma } => {
            let total = data.sum();
            data.values
                .iter()
                .map(|&y| {
                    let (mean, var) = normal_posterior(mu0, tau0, sigma, nf - 1.0, total - y);
                    normal_logpdf(y, mean, sigma * sigma + var)
                })
                .collect()
        }
    };
    Ok(out)
}

/// Closed-form `log p(y | M)`.
pub fn log_marginal_likelihood(model: &ModelSpec, data: &Dataset) -> Result<f64> {
    model.check_data(data)?;
    let nf = data.len() as f64;
    let lml = match *model {
        ModelSpec::BernoulliPoint { theta0 } => {
            let s = data.sum();
            let f = nf - s;
            let term = |count: f64, p: f64| if count == 0.0 { 0.0 } else { count * p.ln() };
            term(s, theta0) + term(f, 1.0 - theta0)
        }
        ModelSpec::BetaBernoulli { a, b } => {
            let s = data.sum();
            ln_beta(a + s, b + (nf - s)) - ln_beta(a, b)
        }
        ModelSpec::NormalPoint { mu0, sigma } => data
            .values
            .iter()
            .map(|&y| normal_logpdf(y, mu0, sigma * sigma))
            .sum(),
        ModelSpec::NormalConjugate { mu0, tau0, sigma } => {
            // y ~ N(mu0 1, sigma² I + tau0² 11ᵀ)
            let s2 = sigma * sigma;
            let t2 = tau0 * tau0;
            let (ss, sum) = data.values.iter().fold((0.0, 0.0), |(ss, sum), &y| {
                let d = y - mu0;
                (ss + d * d, sum + d)
            });
            let quad = (ss - t2 * sum * sum / (s2 + nf * t2)) / s2;
            -0.5 * (nf * (LN_2PI + s2.ln()) + (1.0 + nf * t2 / s2).ln() + quad)
        }
    };
    Ok(lml)
}

/// `log p(y_new | y)` under the posterior given all of `data`.
pub fn posterior_predictive_logpdf(model: &ModelSpec, data: &Dataset, y_new: f64) -> Result<f64> {
    model.check_data(data)?;
    model.check_observation(y_new)?;
    let nf = data.len() as f64;
    let lp = match *model {
        ModelSpec::BernoulliPoint { theta0 } => bernoulli_logpmf(y_new, theta0),
        ModelSpec::BetaBernoulli { a, b } => {
            let s = data.sum();
            let denom = a + b + nf;
            if y_new == 1.0 {
                ((a + s) / denom).ln()
            } else {
                ((b + (nf - s)) / denom).ln()
            }
        }
        ModelSpec::NormalPoint { mu0, sigma } => normal_logpdf(y_new, mu0, sigma * sigma),
        ModelSpec::NormalConjugate { mu0, tau0, sigma } => {
            let (mean, var) = normal_posterior(mu0, tau0, sigma, nf, data.sum());
            normal_logpdf(y_new, mean, sigma * sigma + var)
        }
    };
    Ok(lp)
}

/// Density (normal families) or mass (Bernoulli families) of `y_new` under the
/// posterior predictive.
pub fn posterior_predictive_pdf(model: &ModelSpec, data: &Dataset, y_new: f64) -> Result<f64> {
    posterior_predictive_logpdf(model, data, y_new).map(f64::exp)
}

/// Draws `count` parameter values from the posterior given `data`, using the
/// supplied generator. Point-mass families return the point value.
pub fn sample_posterior<R: Rng + ?Sized>(
    model: &ModelSpec,
    data: &Dataset,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    model.check_data(data)?;
    let nf = data.len() as f64;
    let draws = match *model {
        ModelSpec::BernoulliPoint { theta0 } => vec![theta0; count],
        ModelSpec::NormalPoint { mu0, .. } => vec![mu0; count],
        ModelSpec::BetaBernoulli { a, b } => {
            let s = data.sum();
            let beta = rand_distr::Beta::new(a + s, b + nf - s)
                .map_err(|e| Error::InvalidModel(e.to_string()))?;
            (0..count).map(|_| rng.sample(beta)).collect()
        }
        ModelSpec::NormalConjugate { mu0, tau0, sigma } => {
            let (mean, var) = normal_posterior(mu0, tau0, sigma, nf, data.sum());
            let sd = var.sqrt();
            (0..count)
                .map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
    };
    Ok(draws)
}

/// `log p(y | θ)` for a single observation at parameter value `theta`
/// (θ is the success probability or the normal mean).
pub fn log_likelihood(model: &ModelSpec, y: f64, theta: f64) -> f64 {
    match *model {
        ModelSpec::BernoulliPoint { .. } | ModelSpec::BetaBernoulli { .. } => {
            bernoulli_logpmf(y, theta)
        }
        ModelSpec::NormalPoint { sigma, .. } | ModelSpec::NormalConjugate { sigma, .. } => {
            normal_logpdf(y, theta, sigma * sigma)
        }
    }
}

/// Kind of data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DgpKind {
    BernoulliIid {
        theta: f64,
    },
    NormalIid {
        mu: f64,
        sigma: f64,
    },
    /// 1, 1, 1, ...
    IdealizedAllOnes,
    /// 1, 0, 1, 0, ...
    IdealizedAlternatingPairs,
    /// 0, 0, 0, ...
    IdealizedAllZeros,
}

impl DgpKind {
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            DgpKind::BernoulliIid { .. } | DgpKind::NormalIid { .. }
        )
    }
}

/// A data-generating process together with the random stream it draws from.
///
/// Stochastic kinds use the uniform / standard-normal variates of stream
/// `(seed, stream)`. Bernoulli draws are `u < θ` on a shared uniform, so two
/// processes that differ only in θ are coupled observation by observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl DgpSpec {
    pub fn new(kind: DgpKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            stream: 0,
        }
    }

    pub fn idealized(kind: DgpKind) -> Self {
        Self::new(kind, 0)
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }
}

/// Generates `n` observations. Deterministic given `(kind, seed, stream, n)`,
/// and the first `m` values of a run of length `n > m` equal the run of length `m`.
pub fn simulate(dgp: &DgpSpec, n: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let values = match dgp.kind {
        DgpKind::IdealizedAllOnes => vec![1.0; n],
        DgpKind::IdealizedAllZeros => vec![0.0; n],
        DgpKind::IdealizedAlternatingPairs => {
            (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect()
        }
        DgpKind::BernoulliIid { theta } => {
            if !(0.0..=1.0).contains(&theta) {
                return Err(Error::InvalidArgument(format!(
                    "Bernoulli theta must lie in [0, 1], got {theta}"
                )));
            }
            let mut rng = stream_rng(dgp.seed, dgp.stream);
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    if u < theta {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        DgpKind::NormalIid { mu, sigma } => {
            if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "normal DGP needs finite mu and sigma > 0, got mu={mu}, sigma={sigma}"
                )));
            }
            let mut rng = stream_rng(dgp.seed, dgp.stream);
            (0..n)
                .map(|_| mu + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
    };
    Ok(Dataset::new(values))
}
