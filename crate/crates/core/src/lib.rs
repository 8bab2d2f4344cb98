//! Leave-one-out model comparison for conjugate Bayesian models.
//!
//! The crate is organised around one shared currency: the pointwise matrix of
//! leave-one-out log predictive densities `log p(y_i | y_{-i}, M_k)`.
//!
//! * [`models`] produces those densities in closed form for four conjugate
//!   families, together with marginal likelihoods and data simulators.
//! * [`loo`] summarises pointwise vectors into elpd estimates, paired
//!   differences, and handles general models given as log-likelihood draws via
//!   Pareto-smoothed importance sampling.
//! * [`weights`] turns a pointwise matrix into model weights (pseudo-BMA,
//!   pseudo-BMA+, stacking) or marginal likelihoods into BMA weights.
//! * [`experiments`] runs the idealized beta-Bernoulli / normal examples and the
//!   ε-perturbed variants, reporting weight trajectories and the sample size at
//!   which the complex model becomes strongly favoured.
//! * [`io`] holds the CSV and config formats; [`cli`] is the command-line front end.
//!
//! LOO treats the observed data as exchangeable draws from the distribution of
//! future data. Nothing here checks that assumption; [`loo::PairedDiff`] keeps
//! the pointwise differences so residual structure can be inspected.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod io;
pub mod loo;
pub mod models;
pub mod rng;
pub mod weights;

pub use error::{Error, Result};
