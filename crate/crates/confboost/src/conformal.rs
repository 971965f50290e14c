//! Split-conformal calibration.
//!
//! The calibrated quantile is the (1-α) quantile of the empirical score
//! distribution augmented with a point mass at +∞: the k-th smallest
//! calibration score with k = ⌈(1-α)(n+1)⌉, or +∞ when k exceeds n. Inverting
//! the score at that threshold yields intervals with the finite-sample
//! marginal coverage sandwich on exchangeable data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scores::{CqrScoreEval, ScoreParams};

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("empty score vector")]
    EmptyScores,
    #[error("level alpha={alpha} outside (0, 1)")]
    BadAlpha { alpha: f64 },
    #[error("non-finite score at position {index}")]
    NonFiniteScore { index: usize },
}

/// The calibrated score threshold; may be +∞ when the calibration set is too
/// small for the requested level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedQuantile {
    pub value: f64,
    pub alpha: f64,
    pub n_calib: usize,
}

impl CalibratedQuantile {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// A closed prediction interval; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Closed-interval membership.
    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// One-based order-statistic index k = ⌈(1-α)(n+1)⌉.
///
/// The small epsilon guards against the product landing a hair above an
/// exact integer through floating-point rounding.
fn quantile_index(n: usize, alpha: f64) -> usize {
    (((1.0 - alpha) * (n as f64 + 1.0)) - 1e-9).ceil() as usize
}

/// The (1-α) quantile of the mixture (δ_∞ + Σ δ_scores) / (n+1).
pub fn empirical_quantile(scores: &[f64], alpha: f64) -> Result<CalibratedQuantile, ConformalError> {
    if scores.is_empty() {
        return Err(ConformalError::EmptyScores);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConformalError::BadAlpha { alpha });
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ConformalError::NonFiniteScore { index });
    }
    let n = scores.len();
    let k = quantile_index(n, alpha);
    let value = if k > n {
        f64::INFINITY
    } else {
        let mut sorted = scores.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted[k - 1]
    };
    Ok(CalibratedQuantile { value, alpha, n_calib: n })
}

/// Calibration step: the corrected empirical quantile of the scores observed
/// on the calibration set.
pub fn calibrate(score_eval: &[f64], alpha: f64) -> Result<CalibratedQuantile, ConformalError> {
    empirical_quantile(score_eval, alpha)
}

/// Interval [μ - qσ, μ + qσ] for the location/scale family; the whole real
/// line when the quantile is infinite.
pub fn interval_local(mu: f64, sigma: f64, q: &CalibratedQuantile) -> Interval {
    if !q.value.is_finite() {
        return Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY };
    }
    Interval { lower: mu - q.value * sigma, upper: mu + q.value * sigma }
}

/// Interval [μ1 - σq, μ2 + σq] for the two-sided family. A negative quantile
/// narrows the band uniformly; if it narrows past the midpoint (an empty
/// prediction set) the interval collapses to the degenerate midpoint.
pub fn interval_cqr(e: &CqrScoreEval, q: &CalibratedQuantile) -> Interval {
    if !q.value.is_finite() {
        return Interval { lower: f64::NEG_INFINITY, upper: f64::INFINITY };
    }
    let lower = e.mu1 - e.sigma * q.value;
    let upper = e.mu2 + e.sigma * q.value;
    if lower > upper {
        let mid = 0.5 * (lower + upper);
        return Interval { lower: mid, upper: mid };
    }
    Interval { lower, upper }
}

/// Intervals for every sample of a batch score model.
pub fn intervals(params: &ScoreParams<'_>, q: &CalibratedQuantile) -> Vec<Interval> {
    match params {
        ScoreParams::Local { mu, log_sigma } => mu
            .iter()
            .zip(log_sigma.iter())
            .map(|(&m, &ls)| interval_local(m, ls.exp(), q))
            .collect(),
        ScoreParams::Cqr { mu1, mu2, sigma } => (0..mu1.len())
            .map(|i| {
                interval_cqr(
                    &CqrScoreEval { mu1: mu1[i], mu2: mu2[i], sigma: sigma[i] },
                    q,
                )
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::LocalScoreEval;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};

    #[test]
    fn quantile_enumerated_cases() {
        // Nine scores at α=0.1: ten masses, cumulative reaches 0.9 at the 9th.
        let scores: Vec<f64> = (1..=9).map(|v| v as f64).collect();
        assert_eq!(empirical_quantile(&scores, 0.1).unwrap().value, 9.0);

        // Three scores at α=0.5: four masses, cumulative ≥ 0.5 at the 2nd.
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0], 0.5).unwrap().value, 2.0);

        // One score at α=0.1: required index 2 exceeds n=1.
        assert_eq!(empirical_quantile(&[5.0], 0.1).unwrap().value, f64::INFINITY);

        // 99 scores at α=0.1: ⌈0.9·100⌉ = 90.
        let scores: Vec<f64> = (1..=99).map(|v| v as f64).collect();
        assert_eq!(empirical_quantile(&scores, 0.1).unwrap().value, 90.0);

        // n=19 at α=0.05: ⌈0.95·20⌉ = 19 ≤ 19, so the largest score.
        let scores: Vec<f64> = (1..=19).map(|v| v as f64).collect();
        assert_eq!(empirical_quantile(&scores, 0.05).unwrap().value, 19.0);
    }

    #[test]
    fn quantile_constant_scores_and_errors() {
        assert_eq!(calibrate(&[4.2; 12], 0.1).unwrap().value, 4.2);
        assert!(matches!(empirical_quantile(&[], 0.1), Err(ConformalError::EmptyScores)));
        assert!(empirical_quantile(&[1.0], 0.0).is_err());
        assert!(empirical_quantile(&[f64::NAN], 0.1).is_err());
    }

    #[test]
    fn local_interval_cases() {
        let q = CalibratedQuantile { value: 2.0, alpha: 0.1, n_calib: 10 };
        let iv = interval_local(0.0, 1.0, &q);
        assert_eq!((iv.lower, iv.upper), (-2.0, 2.0));

        let q0 = CalibratedQuantile { value: 0.0, alpha: 0.1, n_calib: 10 };
        let point = interval_local(3.0, 5.0, &q0);
        assert_eq!((point.lower, point.upper), (3.0, 3.0));

        let qi = CalibratedQuantile { value: f64::INFINITY, alpha: 0.1, n_calib: 1 };
        let line = interval_local(0.0, 1.0, &qi);
        assert!(line.lower == f64::NEG_INFINITY && line.upper == f64::INFINITY);
        assert!(line.contains(1e300));
    }

    #[test]
    fn cqr_interval_cases() {
        let e = CqrScoreEval { mu1: 1.0, mu2: 3.0, sigma: 1.0 };
        let q = |v: f64| CalibratedQuantile { value: v, alpha: 0.1, n_calib: 10 };
        let iv = interval_cqr(&e, &q(0.5));
        assert_eq!((iv.lower, iv.upper), (0.5, 3.5));

        // Negative quantile narrows uniformly.
        let narrow = interval_cqr(&e, &q(-0.5));
        assert_eq!((narrow.lower, narrow.upper), (1.5, 2.5));

        let same = interval_cqr(&e, &q(0.0));
        assert_eq!((same.lower, same.upper), (1.0, 3.0));
    }

    #[test]
    fn local_interval_matches_score_inversion() {
        // The closed form must agree with {y : score(y) <= q} on a y-grid.
        let e = LocalScoreEval { mu: 0.7, log_sigma: 0.3 };
        let q = CalibratedQuantile { value: 1.37, alpha: 0.1, n_calib: 50 };
        let iv = interval_local(e.mu, e.sigma(), &q);
        for k in -400..=400 {
            let y = k as f64 * 0.01;
            let in_set = crate::scores::local_score(&e, y) <= q.value;
            assert_eq!(iv.contains(y), in_set, "y={y}");
        }
    }

    #[test]
    fn coverage_sandwich_monte_carlo() {
        // Fresh continuous scores: P(new score <= quantile of n scores) must
        // land in [1-α, 1-α + 2/(n+2)] up to 3 binomial standard errors.
        let alpha = 0.1;
        let n = 60;
        let reps = 4000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut covered = 0usize;
        for _ in 0..reps {
            let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let q = empirical_quantile(&scores, alpha).unwrap();
            let fresh: f64 = rng.random();
            if fresh <= q.value {
                covered += 1;
            }
        }
        let rate = covered as f64 / reps as f64;
        let se = (0.9 * 0.1 / reps as f64).sqrt();
        let lo = 1.0 - alpha - 3.0 * se;
        let hi = 1.0 - alpha + 2.0 / (n as f64 + 2.0) + 3.0 * se;
        assert!(rate >= lo && rate <= hi, "rate {rate} not in [{lo}, {hi}]");
    }

    proptest! {
        #[test]
        fn quantile_commutes_with_increasing_maps(
            scores in proptest::collection::vec(-100.0f64..100.0, 1..60),
            alpha in 0.02f64..0.5,
            a in 0.1f64..5.0,
            b in -10.0f64..10.0,
        ) {
            // g(z) = a·z + b with a > 0 is strictly increasing, so the
            // calibrated quantile of the mapped scores is exactly g(q).
            let q = empirical_quantile(&scores, alpha).unwrap();
            let mapped: Vec<f64> = scores.iter().map(|&z| a * z + b).collect();
            let q_mapped = empirical_quantile(&mapped, alpha).unwrap();
            if q.value.is_finite() {
                prop_assert_eq!(q_mapped.value, a * q.value + b);
            } else {
                prop_assert!(q_mapped.value.is_infinite());
            }
        }

        #[test]
        fn interval_always_ordered(
            mu1 in -10.0f64..10.0,
            width in 0.0f64..5.0,
            sigma in 0.01f64..5.0,
            qv in -3.0f64..3.0,
        ) {
            let e = CqrScoreEval { mu1, mu2: mu1 + width, sigma };
            let q = CalibratedQuantile { value: qv, alpha: 0.1, n_calib: 10 };
            let iv = interval_cqr(&e, &q);
            prop_assert!(iv.lower <= iv.upper);
        }
    }
}
