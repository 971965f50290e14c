//! Generalized conformity score families.
//!
//! Two parameterizations are supported: a location/scale family with scores
//! |y - μ(x)| / σ(x), and a two-sided family with scores
//! max{μ1(x) - y, y - μ2(x)} / σ(x). The two are interchangeable through the
//! midpoint/half-width transforms below, which map one family's score to a
//! strictly increasing affine image of the other's and therefore produce
//! identical conformal intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("degenerate quantile pair: mu1={mu1} >= mu2={mu2}")]
    DegenerateWidth { mu1: f64, mu2: f64 },
    #[error("score vectors have mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Pointwise evaluation of a location/scale score model at one x.
///
/// The scale is carried in log-space so that additive boosting updates can
/// never drive σ to zero or below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalScoreEval {
    pub mu: f64,
    pub log_sigma: f64,
}

impl LocalScoreEval {
    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }
}

/// Pointwise evaluation of a two-sided score model at one x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqrScoreEval {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma: f64,
}

/// Local score |y - μ| / σ; zero exactly when y = μ.
pub fn local_score(e: &LocalScoreEval, y: f64) -> f64 {
    (y - e.mu).abs() / e.sigma()
}

/// Two-sided score max{μ1 - y, y - μ2} / σ; negative iff y lies strictly
/// inside (μ1, μ2).
pub fn cqr_score(e: &CqrScoreEval, y: f64) -> f64 {
    (e.mu1 - y).max(y - e.mu2) / e.sigma
}

/// Midpoint/half-width reduction of a quantile pair to a Local pair.
///
/// With μ = (μ1+μ2)/2 and σ = (μ2-μ1)/2, the Local score equals 2E_r + 1
/// where E_r is the width-rescaled two-sided score, so both yield the same
/// conformal intervals.
pub fn cqr_to_local(mu1: f64, mu2: f64) -> Result<(f64, f64), ScoreError> {
    if !(mu1 < mu2) {
        return Err(ScoreError::DegenerateWidth { mu1, mu2 });
    }
    Ok(((mu1 + mu2) / 2.0, (mu2 - mu1) / 2.0))
}

/// Inverse direction: a Local pair (μ, log σ) as an equivalent two-sided
/// triple (μ - σ, μ + σ, 2σ).
pub fn local_to_cqr(mu: f64, log_sigma: f64) -> CqrScoreEval {
    let sigma = log_sigma.exp();
    CqrScoreEval {
        mu1: mu - sigma,
        mu2: mu + sigma,
        sigma: 2.0 * sigma,
    }
}

/// Batch view of a score model evaluated on n samples.
#[derive(Debug, Clone)]
pub enum ScoreParams<'a> {
    Local {
        mu: &'a [f64],
        log_sigma: &'a [f64],
    },
    Cqr {
        mu1: &'a [f64],
        mu2: &'a [f64],
        sigma: &'a [f64],
    },
}

impl ScoreParams<'_> {
    pub fn len(&self) -> usize {
        match self {
            ScoreParams::Local { mu, .. } => mu.len(),
            ScoreParams::Cqr { mu1, .. } => mu1.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Conformity scores of each (x_i, y_i) pair.
    pub fn scores(&self, y: &[f64]) -> Result<Vec<f64>, ScoreError> {
        if y.len() != self.len() {
            return Err(ScoreError::LengthMismatch(self.len(), y.len()));
        }
        Ok(match self {
            ScoreParams::Local { mu, log_sigma } => (0..y.len())
                .map(|i| {
                    local_score(
                        &LocalScoreEval {
                            mu: mu[i],
                            log_sigma: log_sigma[i],
                        },
                        y[i],
                    )
                })
                .collect(),
            ScoreParams::Cqr { mu1, mu2, sigma } => (0..y.len())
                .map(|i| {
                    cqr_score(
                        &CqrScoreEval {
                            mu1: mu1[i],
                            mu2: mu2[i],
                            sigma: sigma[i],
                        },
                        y[i],
                    )
                })
                .collect(),
        })
    }
}
