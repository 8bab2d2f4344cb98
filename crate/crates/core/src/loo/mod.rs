//! Expected log pointwise predictive density (elpd) estimates.
//!
//! Totals are reported as sums over observations, so the standard error of
//! an estimate built from `n` pointwise values is `sqrt(n · Var)` with `Var`
//! the sample variance (denominator `n - 1`). Divide both by `n` for the
//! per-observation mean.
//!
//! This is the simple variance estimate. It is known to be optimistic; no
//! correction is applied.

mod gpd;
mod psis;

pub use gpd::{gpd_fit, gpd_quantile, GpdFit};
pub use psis::{
    psis_loo, psis_loo_with, psis_smooth, LogLikDraws, ParetoDiagnostics, PsisOptions,
    DEFAULT_KHAT_THRESHOLD, MIN_DRAWS,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// elpd total, its standard error and the pointwise values it summarises.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElpdEstimate {
    pub elpd: f64,
    pub se: f64,
    pub pointwise: Vec<f64>,
}

impl ElpdEstimate {
    pub fn n(&self) -> usize {
        self.pointwise.len()
    }

    /// elpd per observation.
    pub fn mean(&self) -> f64 {
        self.elpd / self.n() as f64
    }
}

/// Paired comparison of two models on the same observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedDiff {
    /// elpd of A minus elpd of B.
    pub diff: f64,
    pub se_diff: f64,
    pub pointwise_diff: Vec<f64>,
}

fn check_pointwise(values: &[f64], what: &str) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            actual: values.len(),
        });
    }
    if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("{what}[{i}]"),
            value: v,
        });
    }
    Ok(())
}

/// `sqrt(n · sample variance)`.
///
/// Values are shifted by the first entry before the two-pass variance, so a
/// constant vector gives exactly zero.
pub(crate) fn total_se(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let origin = values[0];
    let mean = values.iter().map(|v| v - origin).sum::<f64>() / n as f64;
    let ss: f64 = values
        .iter()
        .map(|v| {
            let d = (v - origin) - mean;
            d * d
        })
        .sum();
    (n as f64 * ss / (n - 1) as f64).sqrt()
}

/// Sample variance, shifted by the first entry (exactly zero for constant input).
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let se = total_se(values);
    se * se / n as f64
}

pub fn elpd_from_pointwise(pointwise: &[f64]) -> Result<ElpdEstimate> {
    check_pointwise(pointwise, "pointwise")?;
    Ok(ElpdEstimate {
        elpd: pointwise.iter().sum(),
        se: total_se(pointwise),
        pointwise: pointwise.to_vec(),
    })
}

pub fn paired_diff(pw_a: &[f64], pw_b: &[f64]) -> Result<PairedDiff> {
    if pw_a.len() != pw_b.len() {
        return Err(Error::LengthMismatch(pw_a.len(), pw_b.len()));
    }
    check_pointwise(pw_a, "a")?;
    check_pointwise(pw_b, "b")?;
    let pointwise_diff: Vec<f64> = pw_a.iter().zip(pw_b).map(|(a, b)| a - b).collect();
    Ok(PairedDiff {
        diff: pointwise_diff.iter().sum(),
        se_diff: total_se(&pointwise_diff),
        pointwise_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_pointwise_has_zero_se() {
        let c = (10.0f64 / 11.0).ln();
        let est = elpd_from_pointwise(&[c; 10]).unwrap();
        assert!((est.elpd - 10.0 * c).abs() < 1e-14);
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn small_examples() {
        let zero = elpd_from_pointwise(&[0.0, 0.0]).unwrap();
        assert_eq!((zero.elpd, zero.se), (0.0, 0.0));

        let est = elpd_from_pointwise(&[-1.0, -2.0, -3.0]).unwrap();
        assert_eq!(est.elpd, -6.0);
        assert!((est.se - 3f64.sqrt()).abs() < 1e-15);
        assert!((est.mean() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            elpd_from_pointwise(&[1.0]),
            Err(Error::TooFewObservations { .. })
        ));
        assert!(matches!(
            elpd_from_pointwise(&[1.0, f64::NEG_INFINITY]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            paired_diff(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::LengthMismatch(2, 3))
        ));
    }

    #[test]
    fn paired_examples() {
        let c = (10.0f64 / 11.0).ln();
        let d = paired_diff(&[0.0; 10], &[c; 10]).unwrap();
        assert!((d.diff + 10.0 * c).abs() < 1e-14);
        assert!(d.diff > 0.0);
        assert_eq!(d.se_diff, 0.0);

        let same = paired_diff(&[0.3, -1.2, 4.0], &[0.3, -1.2, 4.0]).unwrap();
        assert_eq!((same.diff, same.se_diff), (0.0, 0.0));

        let d = paired_diff(&[0.0, -2.0], &[-1.0, 0.0]).unwrap();
        assert_eq!(d.diff, -1.0);
        assert_eq!(d.pointwise_diff, vec![1.0, -2.0]);
        assert!((d.se_diff - 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn elpd_is_sum_and_se_is_translation_invariant(
            mut v in proptest::collection::vec(-50.0f64..5.0, 2..60),
            c in -100.0f64..100.0,
            rot in 0usize..60,
        ) {
            let est = elpd_from_pointwise(&v).unwrap();
            let sum: f64 = v.iter().sum();
            prop_assert!((est.elpd - sum).abs() <= 1e-12 * sum.abs().max(1.0));

            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let est_s = elpd_from_pointwise(&shifted).unwrap();
            let n = v.len() as f64;
            prop_assert!((est_s.elpd - est.elpd - n * c).abs() < 1e-9 * (1.0 + est.elpd.abs() + n * c.abs()));
            prop_assert!((est_s.se - est.se).abs() < 1e-8 * (1.0 + est.se));

            let k = rot % v.len();
            v.rotate_left(k);
            let est_r = elpd_from_pointwise(&v).unwrap();
            prop_assert!((est_r.elpd - est.elpd).abs() < 1e-10 * (1.0 + est.elpd.abs()));
            prop_assert!((est_r.se - est.se).abs() < 1e-10 * (1.0 + est.se));
        }

        #[test]
        fn se_zero_iff_constant(v in proptest::collection::vec(-5.0f64..5.0, 2..30), c in -10.0f64..10.0) {
            prop_assert_eq!(elpd_from_pointwise(&vec![c; v.len()]).unwrap().se, 0.0);
            let constant = v.iter().all(|x| *x == v[0]);
            prop_assert_eq!(elpd_from_pointwise(&v).unwrap().se == 0.0, constant);
        }

        #[test]
        fn paired_diff_matches_elpd_difference(
            pairs in proptest::collection::vec((-20.0f64..0.0, -20.0f64..0.0), 2..50),
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let d = paired_diff(&a, &b).unwrap();
            let expect = elpd_from_pointwise(&a).unwrap().elpd - elpd_from_pointwise(&b).unwrap().elpd;
            prop_assert!((d.diff - expect).abs() <= 1e-12 * (1.0 + expect.abs()) + 1e-12 * a.len() as f64 * 20.0);
        }
    }
}
