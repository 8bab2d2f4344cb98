mod common;

use common::{
    chain_rule_marginal, compensated_sum, grid_search_stacking, loglik_draws, quadrature_loo,
    quadrature_predictive, reference_stacking_objective,
};
use loo_lab::loo::{elpd_from_pointwise, gpd_fit, psis_loo, LogLikDraws};
use loo_lab::models::{
    exact_loo_pointwise, log_marginal_likelihood, posterior_predictive_logpdf, sample_posterior,
    simulate, Dataset, DgpKind, DgpSpec, ModelSpec,
};
use loo_lab::rng::stream_rng;
use loo_lab::weights::{
    bma, pseudo_bma, pseudo_bma_plus, stacking, stacking_objective, uniform_prior, Diagnostics,
    PointwiseMatrix,
};
use rand::Rng;

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("M{i}")).collect()
}

#[test]
fn beta_bernoulli_loo_matches_quadrature() {
    let model = ModelSpec::BetaBernoulli { a: 2.0, b: 3.0 };
    let data = [1.0, 0.0, 1.0];
    let exact = exact_loo_pointwise(&model, &Dataset::from(data.to_vec())).unwrap();
    let quad = quadrature_loo(&model, &data);
    for (e, q) in exact.iter().zip(&quad) {
        assert!((e - q).abs() < 1e-10, "{e} vs {q}");
    }
    // p(y_1 = 1 | 0, 1) = (2 + 1) / (5 + 2)
    assert!((exact[0] - (3.0f64 / 7.0).ln()).abs() < 1e-14);
}

#[test]
fn normal_conjugate_loo_matches_quadrature() {
    let model = ModelSpec::NormalConjugate {
        mu0: 0.5,
        tau0: 2.0,
        sigma: 1.5,
    };
    let data = [0.3, -1.2, 2.4, 0.9, 0.0, -0.4];
    let exact = exact_loo_pointwise(&model, &Dataset::from(data.to_vec())).unwrap();
    let quad = quadrature_loo(&model, &data);
    for (e, q) in exact.iter().zip(&quad) {
        assert!((e - q).abs() < 1e-10, "{e} vs {q}");
    }
}

#[test]
fn posterior_predictive_matches_quadrature_off_sample() {
    let model = ModelSpec::NormalConjugate {
        mu0: 0.0,
        tau0: 1.0,
        sigma: 1.0,
    };
    let data = Dataset::from(vec![0.4, 1.1, -0.3]);
    for y in [-3.0, 0.0, 0.7, 4.0] {
        let exact = posterior_predictive_logpdf(&model, &data, y).unwrap();
        let quad = quadrature_predictive(&model, data.values(), y);
        assert!((exact - quad).abs() < 1e-10);
    }
}

#[test]
fn marginal_likelihood_matches_chain_rule() {
    let models = [
        ModelSpec::BetaBernoulli { a: 0.5, b: 0.5 },
        ModelSpec::BetaBernoulli { a: 3.0, b: 1.5 },
    ];
    let bern = [1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
    for m in &models {
        let closed = log_marginal_likelihood(m, &Dataset::from(bern.to_vec())).unwrap();
        assert!((closed - chain_rule_marginal(m, &bern)).abs() < 1e-9);
    }
    let normal = ModelSpec::NormalConjugate {
        mu0: -1.0,
        tau0: 0.7,
        sigma: 1.3,
    };
    let ys = [0.2, -0.5, 1.7, -2.2, 0.1];
    let closed = log_marginal_likelihood(&normal, &Dataset::from(ys.to_vec())).unwrap();
    assert!((closed - chain_rule_marginal(&normal, &ys)).abs() < 1e-9);
}

/// Inverse-CDF draws from GPD(k, σ), sorted ascending.
fn gpd_sample(k: f64, sigma: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    let mut xs: Vec<f64> = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            if k == 0.0 {
                -sigma * (1.0 - u).ln()
            } else {
                sigma * ((1.0 - u).powf(-k) - 1.0) / k
            }
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    xs
}

#[test]
fn gpd_fit_recovers_shape() {
    for (k, seed) in [(0.5, 11), (0.0, 12)] {
        let fit = gpd_fit(&gpd_sample(k, 1.0, 10_000, seed)).unwrap();
        assert!((fit.k - k).abs() < 0.05, "k = {k}: fitted {}", fit.k);
        assert!((fit.sigma - 1.0).abs() < 0.1, "sigma {}", fit.sigma);
    }
}

#[test]
fn bernoulli_simulation_frequency() {
    let theta = 0.3;
    let n = 100_000;
    let data = simulate(&DgpSpec::new(DgpKind::BernoulliIid { theta }, 5), n).unwrap();
    let mean = data.values().iter().sum::<f64>() / n as f64;
    let sd = (theta * (1.0 - theta) / n as f64).sqrt();
    assert!((mean - theta).abs() < 4.0 * sd, "mean {mean}");
    assert!(data.values().iter().all(|&v| v == 0.0 || v == 1.0));
}

#[test]
fn normal_simulation_moments() {
    let n = 100_000;
    let data = simulate(
        &DgpSpec::new(
            DgpKind::NormalIid {
                mu: 1.5,
                sigma: 2.0,
            },
            6,
        ),
        n,
    )
    .unwrap();
    let mean = data.values().iter().sum::<f64>() / n as f64;
    let var = data
        .values()
        .iter()
        .map(|y| (y - mean).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    assert!((mean - 1.5).abs() < 4.0 * 2.0 / (n as f64).sqrt());
    assert!((var - 4.0).abs() < 0.1);
}

fn psis_error(model: &ModelSpec, data: &Dataset, draws: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, 1);
    let thetas = sample_posterior(model, data, draws, &mut rng).unwrap();
    let ll = LogLikDraws::new(
        draws,
        data.len(),
        loglik_draws(model, data.values(), &thetas),
    )
    .unwrap();
    let (est, _) = psis_loo(&ll).unwrap();
    let exact = elpd_from_pointwise(&exact_loo_pointwise(model, data).unwrap()).unwrap();
    (est.elpd - exact.elpd).abs()
}

#[test]
fn psis_error_shrinks_with_more_draws() {
    let model = ModelSpec::NormalConjugate {
        mu0: 0.0,
        tau0: 1.0,
        sigma: 1.0,
    };
    let data = simulate(
        &DgpSpec::new(
            DgpKind::NormalIid {
                mu: 0.3,
                sigma: 1.0,
            },
            3,
        ),
        20,
    )
    .unwrap();
    let mut small: Vec<f64> = (0..20).map(|s| psis_error(&model, &data, 500, s)).collect();
    let mut large: Vec<f64> = (0..20)
        .map(|s| psis_error(&model, &data, 4000, 100 + s))
        .collect();
    small.sort_by(f64::total_cmp);
    large.sort_by(f64::total_cmp);
    assert!(
        large[10] < small[10],
        "median {} vs {}",
        large[10],
        small[10]
    );
}

fn random_matrix(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..k)
                .map(|_| -3.0 * rng.random::<f64>().powi(2) - 0.1)
                .collect()
        })
        .collect()
}

#[test]
fn pseudo_bma_matches_compensated_softmax() {
    let mut rng = stream_rng(21, 0);
    for _ in 0..20 {
        let rows = random_matrix(&mut rng, 30, 3);
        let m = PointwiseMatrix::new(rows.clone(), labels(3)).unwrap();
        let got = pseudo_bma(&m).unwrap();
        let elpd: Vec<f64> = (0..3)
            .map(|k| compensated_sum(rows.iter().map(|r| r[k])))
            .collect();
        let max = elpd.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z = compensated_sum(elpd.iter().map(|e| (e - max).exp()));
        for (w, l) in got.weights.iter().zip(&elpd) {
            assert!((w - (l - max).exp() / z).abs() < 1e-12);
        }
    }
}

#[test]
fn stacking_objective_matches_reference() {
    let mut rng = stream_rng(22, 0);
    for _ in 0..20 {
        let rows = random_matrix(&mut rng, 25, 3);
        let m = PointwiseMatrix::new(rows.clone(), labels(3)).unwrap();
        let w = [0.2, 0.5, 0.3];
        let got = stacking_objective(&w, &m).unwrap();
        assert!((got - reference_stacking_objective(&w, &rows)).abs() < 1e-11);
    }
}

#[test]
fn stacking_beats_grid_search() {
    let mut rng = stream_rng(23, 0);
    for case in 0..10 {
        let k = 2 + case % 2;
        let rows = random_matrix(&mut rng, 20, k);
        let m = PointwiseMatrix::new(rows.clone(), labels(k)).unwrap();
        let got = stacking(&m, 1e-10).unwrap();
        let obj = reference_stacking_objective(&got.weights, &rows);
        let (_, best) = grid_search_stacking(&rows, 0.001);
        assert!(best - obj < 1e-6, "case {case}: grid {best} vs {obj}");
        assert!(matches!(
            got.diagnostics,
            Diagnostics::Stacking {
                converged: true,
                ..
            }
        ));
    }
}

#[test]
fn pseudo_bma_plus_converges_in_bootstrap_size() {
    let mut rng = stream_rng(24, 0);
    let rows = random_matrix(&mut rng, 20, 2);
    let m = PointwiseMatrix::new(rows, labels(2)).unwrap();
    let coarse = pseudo_bma_plus(&m, 100_000, 1).unwrap();
    let fine = pseudo_bma_plus(&m, 1_000_000, 2).unwrap();
    let se = match (&coarse.diagnostics, &fine.diagnostics) {
        (Diagnostics::Bootstrap { mc_se: a, .. }, Diagnostics::Bootstrap { mc_se: b, .. }) => {
            (a[0] * a[0] + b[0] * b[0]).sqrt()
        }
        other => panic!("unexpected diagnostics {other:?}"),
    };
    assert!(se > 0.0);
    assert!((coarse.weights[0] - fine.weights[0]).abs() < 3.0 * se);
}

#[test]
fn bma_agrees_with_chain_rule_marginals() {
    let h0 = ModelSpec::BernoulliPoint { theta0: 0.5 };
    let h1 = ModelSpec::BetaBernoulli { a: 1.0, b: 1.0 };
    let data = simulate(&DgpSpec::new(DgpKind::BernoulliIid { theta: 0.7 }, 9), 40).unwrap();
    let lm: Vec<f64> = [&h0, &h1]
        .iter()
        .map(|m| log_marginal_likelihood(m, &data).unwrap())
        .collect();
    let got = bma(&lm, &uniform_prior(2)).unwrap();
    let r0 = chain_rule_marginal(&h0, data.values());
    let r1 = chain_rule_marginal(&h1, data.values());
    let expected = 1.0 / (1.0 + (r1 - r0).exp());
    assert!((got.weights[0] - expected).abs() < 1e-9);
}
