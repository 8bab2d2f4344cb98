//! The three idealized null-vs-alternative examples and their ε-perturbed
//! variants.
//!
//! | example | null `H0`               | alternative `H1`          | idealized data | ε truth         |
//! |---------|------------------------|---------------------------|----------------|-----------------|
//! | 1       | Bernoulli, θ = 1       | θ ~ Beta(a, b)            | 1, 1, 1, …     | θ = 1 − ε       |
//! | 2       | Bernoulli, θ = 1/2     | θ ~ Beta(a, b)            | 1, 0, 1, 0, …  | θ = 1/2 + ε     |
//! | 3       | Normal, μ = 0, σ = 1   | μ ~ N(0, τ₀²), σ = 1      | 0, 0, 0, …     | μ = ε           |
//!
//! For each sample size in the grid the runner builds the `n × 2` exact LOO
//! matrix `(H0, H1)` and computes the requested weighting schemes. In ε mode
//! each replication simulates one long sequence and uses its prefixes, so a
//! trajectory follows a single data stream. Replication `r` uses stream `r` of
//! the config seed for every ε, which couples the data across ε values.
//!
//! `n*` is the smallest grid size at which the median (over replications)
//! weight of `H1` reaches the threshold; 0.95 by default.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    exact_loo_pointwise, log_marginal_likelihood, posterior_predictive_pdf, simulate, Dataset,
    DgpKind, DgpSpec, ModelSpec,
};
use crate::rng::derive_seed;
use crate::weights::{
    bma, pseudo_bma, pseudo_bma_plus, stacking, uniform_prior, PointwiseMatrix, Scheme,
    WeightVector, DEFAULT_BOOTSTRAP_DRAWS,
};

/// Smallest ε the harness accepts; well above double-precision resolution near 1.
pub const EPSILON_FLOOR: f64 = 1.0 / (1u64 << 45) as f64;
pub const DEFAULT_THRESHOLD: f64 = 0.95;
pub const MODEL_LABELS: [&str; 2] = ["H0", "H1"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Example {
    /// Point mass at θ = 1 against a beta prior.
    One,
    /// Point mass at θ = 1/2 against a beta prior.
    Two,
    /// Point mass at μ = 0 against a normal prior.
    Three,
}

impl Example {
    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Example::One),
            2 => Ok(Example::Two),
            3 => Ok(Example::Three),
            other => Err(Error::config(
                "example",
                format!("must be 1, 2 or 3, got {other}"),
            )),
        }
    }

    pub fn id(&self) -> u32 {
        match self {
            Example::One => 1,
            Example::Two => 2,
            Example::Three => 3,
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        !matches!(self, Example::Three)
    }

    pub fn idealized_kind(&self) -> DgpKind {
        match self {
            Example::One => DgpKind::IdealizedAllOnes,
            Example::Two => DgpKind::IdealizedAlternatingPairs,
            Example::Three => DgpKind::IdealizedAllZeros,
        }
    }

    /// Data-generating process with the truth moved ε away from the null value.
    pub fn perturbed_kind(&self, epsilon: f64) -> DgpKind {
        match self {
            Example::One => DgpKind::BernoulliIid {
                theta: 1.0 - epsilon,
            },
            Example::Two => DgpKind::BernoulliIid {
                theta: 0.5 + epsilon,
            },
            Example::Three => DgpKind::NormalIid {
                mu: epsilon,
                sigma: 1.0,
            },
        }
    }

    /// Largest ε keeping the perturbed truth a valid parameter.
    pub fn max_epsilon(&self) -> f64 {
        match self {
            Example::One => 1.0,
            Example::Two => 0.5,
            Example::Three => f64::INFINITY,
        }
    }
}

/// Prior hyperparameters of the alternative model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prior", rename_all = "snake_case")]
pub enum Prior {
    Beta { a: f64, b: f64 },
    Normal { tau0: f64 },
}

/// Null and alternative models of an example.
pub fn example_models(example: Example, prior: Prior) -> Result<(ModelSpec, ModelSpec)> {
    let pair = match (example, prior) {
        (Example::One, Prior::Beta { a, b }) => (
            ModelSpec::BernoulliPoint { theta0: 1.0 },
            ModelSpec::BetaBernoulli { a, b },
        ),
        (Example::Two, Prior::Beta { a, b }) => (
            ModelSpec::BernoulliPoint { theta0: 0.5 },
            ModelSpec::BetaBernoulli { a, b },
        ),
        (Example::Three, Prior::Normal { tau0 }) => (
            ModelSpec::NormalPoint {
                mu0: 0.0,
                sigma: 1.0,
            },
            ModelSpec::NormalConjugate {
                mu0: 0.0,
                tau0,
                sigma: 1.0,
            },
        ),
        (e, p) => {
            return Err(Error::config(
                "prior",
                format!("example {} cannot use prior {p:?}", e.id()),
            ))
        }
    };
    pair.0.validate()?;
    pair.1.validate()?;
    Ok(pair)
}

/// The exact-LOO `(H0, H1)` matrix for `data`. Observations a point-mass null
/// rules out appear as `-inf`.
pub fn example_matrix(example: Example, prior: Prior, data: &Dataset) -> Result<PointwiseMatrix> {
    let (null, alt) = example_models(example, prior)?;
    PointwiseMatrix::from_columns_with_impossible(
        vec![
            exact_loo_pointwise(&null, data)?,
            exact_loo_pointwise(&alt, data)?,
        ],
        MODEL_LABELS.iter().map(|s| s.to_string()).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Idealized,
    Epsilon { epsilons: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub example: Example,
    pub mode: Mode,
    pub prior: Prior,
    pub n_grid: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub replications: usize,
    pub seed: u64,
    pub threshold: f64,
    pub bootstrap_draws: usize,
    pub tol: f64,
}

impl ExperimentConfig {
    /// Config with default threshold, bootstrap size and tolerance and all four schemes.
    pub fn new(example: Example, mode: Mode, prior: Prior, n_grid: Vec<usize>) -> Self {
        Self {
            example,
            mode,
            prior,
            n_grid,
            schemes: Scheme::ALL.to_vec(),
            replications: 1,
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
            bootstrap_draws: DEFAULT_BOOTSTRAP_DRAWS,
            tol: 1e-10,
        }
    }

    pub fn with_schemes(mut self, schemes: Vec<Scheme>) -> Self {
        self.schemes = schemes;
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the config and normalises it (idealized mode runs one replication).
    pub fn validate(&mut self) -> Result<()> {
        example_models(self.example, self.prior)?;
        if self.n_grid.is_empty() {
            return Err(Error::config("n_grid", "must not be empty"));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::config("n_grid", "sample sizes must be at least 2"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("n_grid", "must be strictly increasing"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "must name at least one scheme"));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(Error::config("schemes", format!("{s} listed twice")));
            }
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::config("threshold", "must lie in (0, 1]"));
        }
        if self.bootstrap_draws < crate::weights::MIN_BOOTSTRAP_DRAWS {
            return Err(Error::config(
                "bootstrap",
                format!("must be at least {}", crate::weights::MIN_BOOTSTRAP_DRAWS),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config("tol", "must be positive"));
        }
        match &self.mode {
            Mode::Idealized => {
                self.replications = 1;
                if self.example == Example::Two && self.n_grid.iter().any(|n| n % 2 == 1) {
                    return Err(Error::config(
                        "n_grid",
                        "example 2 idealized data are {1, 0} pairs, so every n must be even",
                    ));
                }
            }
            Mode::Epsilon { epsilons } => {
                if epsilons.is_empty() {
                    return Err(Error::config(
                        "epsilon",
                        "must not be empty in epsilon mode",
                    ));
                }
                if epsilons.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::config("epsilon", "must be strictly increasing"));
                }
                for &e in epsilons {
                    if e.is_nan() || e < EPSILON_FLOOR {
                        return Err(Error::config(
                            "epsilon",
                            format!("{e} is below the floating-point floor 2^-45"),
                        ));
                    }
                    if e > self.example.max_epsilon() {
                        return Err(Error::config(
                            "epsilon",
                            format!(
                                "{e} moves the truth outside the parameter space (max {})",
                                self.example.max_epsilon()
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn epsilons(&self) -> Vec<Option<f64>> {
        match &self.mode {
            Mode::Idealized => vec![None],
            Mode::Epsilon { epsilons } => epsilons.iter().map(|&e| Some(e)).collect(),
        }
    }
}

/// Result of one scheme on one `(ε, n, replication)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub scheme: Scheme,
    pub outcome: std::result::Result<WeightVector, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub n: usize,
    /// Whether the data so far match the idealized sequence of the example.
    pub idealized_data: bool,
    /// Sample variance of the `H0` and `H1` LOO columns (`NaN` if not finite).
    pub column_variance: [f64; 2],
    pub cells: Vec<Cell>,
}

impl TrajectoryPoint {
    pub fn weights(&self, scheme: Scheme) -> Option<&WeightVector> {
        self.cells
            .iter()
            .find(|c| c.scheme == scheme)
            .and_then(|c| c.outcome.as_ref().ok())
    }
}

/// Weights along the sample-size grid for one data stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// `None` for idealized data.
    pub epsilon: Option<f64>,
    pub replication: usize,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn errors(&self) -> impl Iterator<Item = (usize, Scheme, &str)> {
        self.points.iter().flat_map(|p| {
            p.cells.iter().filter_map(move |c| match &c.outcome {
                Err(e) => Some((p.n, c.scheme, e.as_str())),
                Ok(_) => None,
            })
        })
    }
}

fn is_idealized_prefix(example: Example, data: &Dataset) -> bool {
    let target = match simulate(&DgpSpec::idealized(example.idealized_kind()), data.len()) {
        Ok(d) => d,
        Err(_) => return false,
    };
    data.values()
        .iter()
        .zip(target.values())
        .all(|(a, b)| a.to_bits() == b.to_bits())
}

fn scheme_weights(
    config: &ExperimentConfig,
    scheme: Scheme,
    matrix: &PointwiseMatrix,
    data: &Dataset,
    bootstrap_seed: u64,
) -> Result<WeightVector> {
    match scheme {
        Scheme::PseudoBma => pseudo_bma(matrix),
        Scheme::PseudoBmaPlus => pseudo_bma_plus(matrix, config.bootstrap_draws, bootstrap_seed),
        Scheme::Stacking => stacking(matrix, config.tol),
        Scheme::Bma => {
            let (null, alt) = example_models(config.example, config.prior)?;
            bma(
                &[
                    log_marginal_likelihood(&null, data)?,
                    log_marginal_likelihood(&alt, data)?,
                ],
                &uniform_prior(2),
            )
        }
    }
}

/// One trajectory: the data stream for `(epsilon, replication)` evaluated at
/// every grid size. Errors inside a cell are recorded in the cell.
pub fn run_trajectory(
    config: &ExperimentConfig,
    epsilon: Option<f64>,
    replication: usize,
) -> Result<Trajectory> {
    let n_max = *config
        .n_grid
        .last()
        .ok_or_else(|| Error::config("n_grid", "must not be empty"))?;
    let dgp = match epsilon {
        None => DgpSpec::idealized(config.example.idealized_kind()),
        Some(e) => DgpSpec::new(config.example.perturbed_kind(e), config.seed)
            .with_stream(replication as u64),
    };
    let full = simulate(&dgp, n_max)?;
    let mut points = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let data = full.prefix(n);
        let matrix = example_matrix(config.example, config.prior, &data)?;
        let column_variance = [0, 1].map(|k| {
            if matrix.column(k).iter().all(|v| v.is_finite()) {
                matrix.column_variance(k)
            } else {
                f64::NAN
            }
        });
        // the bootstrap stream depends on (seed, replication, n) only, so an
        // ε run that happens to see the idealized data reproduces it
        let bootstrap_seed = derive_seed(derive_seed(config.seed, replication as u64), n as u64);
        let cells = config
            .schemes
            .iter()
            .map(|&scheme| Cell {
                scheme,
                outcome: scheme_weights(config, scheme, &matrix, &data, bootstrap_seed)
                    .map_err(|e| e.to_string()),
            })
            .collect();
        points.push(TrajectoryPoint {
            n,
            idealized_data: is_idealized_prefix(config.example, &data),
            column_variance,
            cells,
        });
    }
    Ok(Trajectory {
        epsilon,
        replication,
        points,
    })
}

/// Every trajectory of the config: one for idealized mode, `replications` per
/// ε otherwise, ordered by ε then replication.
pub fn run_example(config: &ExperimentConfig) -> Result<Vec<Trajectory>> {
    let mut config = config.clone();
    config.validate()?;
    let jobs: Vec<(Option<f64>, usize)> = config
        .epsilons()
        .into_iter()
        .flat_map(|e| (0..config.replications).map(move |r| (e, r)))
        .collect();
    jobs.into_par_iter()
        .map(|(e, r)| run_trajectory(&config, e, r))
        .collect()
}

/// `n*` for one scheme and ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub scheme: Scheme,
    pub epsilon: Option<f64>,
    /// Median `H1` weight at each grid size (`None` when every replication failed).
    pub median_weight: Vec<Option<f64>>,
    pub n_star: Option<usize>,
}

/// Fraction of replications whose data still equal the idealized sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdealizedFraction {
    pub epsilon: Option<f64>,
    pub n: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub trajectories: Vec<Trajectory>,
    pub crossings: Vec<Crossing>,
    pub idealized_fraction: Vec<IdealizedFraction>,
}

impl SweepResult {
    pub fn crossing(&self, scheme: Scheme, epsilon: Option<f64>) -> Option<&Crossing> {
        self.crossings
            .iter()
            .find(|c| c.scheme == scheme && c.epsilon == epsilon)
    }

    pub fn error_count(&self) -> usize {
        self.trajectories.iter().map(|t| t.errors().count()).sum()
    }
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

/// Smallest grid size whose median weight reaches `threshold`.
pub fn first_crossing(
    n_grid: &[usize],
    median_weight: &[Option<f64>],
    threshold: f64,
) -> Option<usize> {
    n_grid
        .iter()
        .zip(median_weight)
        .find(|(_, m)| m.is_some_and(|m| m >= threshold))
        .map(|(&n, _)| n)
}

fn summarize(
    config: &ExperimentConfig,
    trajectories: &[Trajectory],
) -> (Vec<Crossing>, Vec<IdealizedFraction>) {
    let mut crossings = Vec::new();
    let mut fractions = Vec::new();
    for eps in config.epsilons() {
        let group: Vec<&Trajectory> = trajectories.iter().filter(|t| t.epsilon == eps).collect();
        for &scheme in &config.schemes {
            let median_weight: Vec<Option<f64>> = (0..config.n_grid.len())
                .map(|j| {
                    let mut w: Vec<f64> = group
                        .iter()
                        .filter_map(|t| t.points[j].weights(scheme).map(|w| w.weights[1]))
                        .collect();
                    median(&mut w)
                })
                .collect();
            let n_star = first_crossing(&config.n_grid, &median_weight, config.threshold);
            crossings.push(Crossing {
                scheme,
                epsilon: eps,
                median_weight,
                n_star,
            });
        }
        for (j, &n) in config.n_grid.iter().enumerate() {
            let hits = group.iter().filter(|t| t.points[j].idealized_data).count();
            fractions.push(IdealizedFraction {
                epsilon: eps,
                n,
                fraction: hits as f64 / group.len().max(1) as f64,
            });
        }
    }
    (crossings, fractions)
}

/// Runs every `(ε, replication)` trajectory and extracts `n*` per scheme and ε.
pub fn run_epsilon_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let mut config = config.clone();
    config.validate()?;
    let trajectories = run_example(&config)?;
    let (crossings, idealized_fraction) = summarize(&config, &trajectories);
    Ok(SweepResult {
        config,
        trajectories,
        crossings,
        idealized_fraction,
    })
}

/// Sup-norm gap between the null and alternative posterior predictives on
/// idealized data, per sample size.
///
/// Bernoulli examples compare the mass at `y = 0` and `y = 1`; example 3
/// compares densities on an evenly spaced grid over `[-5, 5]`.
pub fn nested_convergence_probe(
    example: Example,
    prior: Prior,
    n_grid: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let (null, alt) = example_models(example, prior)?;
    nested_gap(&null, &alt, example.idealized_kind(), n_grid)
}

/// Predictive gap between two arbitrary models on an idealized sequence.
pub fn nested_gap(
    null: &ModelSpec,
    alt: &ModelSpec,
    kind: DgpKind,
    n_grid: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let query: Vec<f64> = if null.is_bernoulli() {
        vec![0.0, 1.0]
    } else {
        (0..=1000).map(|j| -5.0 + j as f64 * 0.01).collect()
    };
    n_grid
        .iter()
        .map(|&n| {
            let data = simulate(&DgpSpec::idealized(kind), n)?;
            let mut gap: f64 = 0.0;
            for &y in &query {
                let d = posterior_predictive_pdf(null, &data, y)?
                    - posterior_predictive_pdf(alt, &data, y)?;
                gap = gap.max(d.abs());
            }
            Ok((n, gap))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idealized(example: Example, prior: Prior, grid: Vec<usize>) -> ExperimentConfig {
        ExperimentConfig::new(example, Mode::Idealized, prior, grid)
    }

    #[test]
    fn epsilon_floor_value() {
        assert_eq!(EPSILON_FLOOR, 2f64.powi(-45));
    }

    #[test]
    fn example_one_idealized_weights() {
        let cfg = idealized(
            Example::One,
            Prior::Beta { a: 1.0, b: 1.0 },
            vec![5, 10, 100],
        );
        let traj = run_example(&cfg).unwrap();
        assert_eq!(traj.len(), 1);
        for p in &traj[0].points {
            assert_eq!(p.weights(Scheme::Stacking).unwrap().weights, vec![1.0, 0.0]);
            assert!(p.idealized_data);
            assert_eq!(p.column_variance, [0.0, 0.0]);
        }
        let w10 = traj[0].points[1].weights(Scheme::PseudoBma).unwrap();
        assert!((w10.weights[0] - 0.7218).abs() < 1e-4);
        assert!((w10.weights[1] - 0.2782).abs() < 1e-4);
    }

    #[test]
    fn config_validation() {
        let prior = Prior::Beta { a: 1.0, b: 1.0 };
        let mut empty = idealized(Example::One, prior, vec![]);
        assert!(matches!(empty.validate(), Err(Error::Config { .. })));
        let mut unsorted = idealized(Example::One, prior, vec![10, 5]);
        assert!(unsorted.validate().is_err());
        let mut tiny = ExperimentConfig::new(
            Example::One,
            Mode::Epsilon {
                epsilons: vec![1e-15],
            },
            prior,
            vec![10],
        );
        assert!(tiny.validate().is_err());
        let mut wrong_prior = idealized(Example::Three, prior, vec![10]);
        assert!(wrong_prior.validate().is_err());
        let mut odd = idealized(Example::Two, prior, vec![10, 11]);
        assert!(odd.validate().is_err());
        let mut forced = idealized(Example::One, prior, vec![10]).with_replications(7);
        forced.validate().unwrap();
        assert_eq!(forced.replications, 1);
        let mut too_big = ExperimentConfig::new(
            Example::Two,
            Mode::Epsilon {
                epsilons: vec![0.6],
            },
            prior,
            vec![10],
        );
        assert!(too_big.validate().is_err());
    }

    #[test]
    fn contradicting_data_is_a_cell_error_for_pseudo_bma_only() {
        // ε = 0.5 guarantees zeros quickly in example 1
        let cfg = ExperimentConfig::new(
            Example::One,
            Mode::Epsilon {
                epsilons: vec![0.5],
            },
            Prior::Beta { a: 1.0, b: 1.0 },
            vec![50],
        )
        .with_seed(3);
        let traj = run_example(&cfg).unwrap();
        let p = &traj[0].points[0];
        assert!(!p.idealized_data);
        assert!(p.weights(Scheme::PseudoBma).is_none());
        assert!(p.weights(Scheme::PseudoBmaPlus).is_none());
        assert_eq!(p.weights(Scheme::Bma).unwrap().weights, vec![0.0, 1.0]);
        let st = p.weights(Scheme::Stacking).unwrap();
        assert!(st.weights[1] > 0.5);
        assert_eq!(traj[0].errors().count(), 2);
    }

    #[test]
    fn median_and_crossing() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        let grid = [10, 20, 40];
        assert_eq!(
            first_crossing(&grid, &[Some(0.5), Some(0.96), Some(0.9)], 0.95),
            Some(20)
        );
        assert_eq!(
            first_crossing(&grid, &[None, Some(0.2), Some(0.9)], 0.95),
            None
        );
    }

    #[test]
    fn nested_probe_example_one_closed_form() {
        let gaps =
            nested_convergence_probe(Example::One, Prior::Beta { a: 1.0, b: 1.0 }, &[1, 10, 100])
                .unwrap();
        for (n, gap) in gaps {
            assert!((gap - 1.0 / (n as f64 + 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn nested_probe_point_model_against_itself() {
        let m = ModelSpec::BernoulliPoint { theta0: 0.5 };
        let gaps = nested_gap(&m, &m, DgpKind::IdealizedAlternatingPairs, &[2, 20]).unwrap();
        assert!(gaps.iter().all(|&(_, g)| g == 0.0));
    }

    #[test]
    fn nested_probe_decreases_for_examples_two_and_three() {
        // with a = b the beta predictive on balanced data is exactly 1/2, so use a != b
        let g2 = nested_convergence_probe(
            Example::Two,
            Prior::Beta { a: 2.0, b: 5.0 },
            &[10, 100, 1000],
        )
        .unwrap();
        assert!(g2[2].1 < g2[0].1);
        let flat =
            nested_convergence_probe(Example::Two, Prior::Beta { a: 2.0, b: 2.0 }, &[10, 100])
                .unwrap();
        assert!(flat.iter().all(|&(_, g)| g < 1e-15));
        let g3 = nested_convergence_probe(
            Example::Three,
            Prior::Normal { tau0: 1.0 },
            &[10, 100, 1000],
        )
        .unwrap();
        assert!(g3.windows(2).all(|w| w[1].1 < w[0].1));
    }
}
