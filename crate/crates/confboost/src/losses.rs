//! Task losses and their smooth, differentiable counterparts.
//!
//! Two objectives are supported: average interval length and maximum
//! within-group coverage deviation. Each comes in a hard form (used for
//! round selection and evaluation) and a smooth form with analytic gradients
//! with respect to each sample's (μ_i, log σ_i) (used to drive boosting).
//!
//! The smooth forms replace the calibrated quantile with the Harrell-Davis
//! smooth quantile, the coverage indicator with a product of two sigmoids,
//! and the max over groups with a log-sum-exp; the absolute value of the
//! per-group deviation keeps its ±1 subgradient. Because every sample's
//! score enters the smooth quantile, each gradient component carries both a
//! direct term and a coupling term through the quantile.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::{self, Interval};
use crate::contrast_tree::{self, CoverageIndicators, TreeError};
use crate::data::FeatureMatrix;
use crate::scores::ScoreParams;
use crate::smooth_quantile::{hd_weights, smooth_quantile_with_weights, HdWeights, QuantileError};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("interval {index} is infinite; length loss undefined")]
    InfiniteInterval { index: usize },
    #[error("input vectors have mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("partition part {part} is empty")]
    EmptyPart { part: usize },
    #[error("group {group} is empty")]
    EmptyGroup { group: usize },
    #[error("{count} weights for {groups} groups")]
    WeightCountMismatch { count: usize, groups: usize },
    #[error(transparent)]
    Quantile(#[from] QuantileError),
    #[error(transparent)]
    Conformal(#[from] conformal::ConformalError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A loss value with its gradient with respect to per-sample (μ_i, log σ_i).
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub d_mu: Vec<f64>,
    pub d_log_sigma: Vec<f64>,
}

/// Sharpness parameters of the sigmoid and log-sum-exp approximations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub tau1: f64,
    pub tau2: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams { tau1: 50.0, tau2: 50.0 }
    }
}

/// An inclusive response range, for label-group objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelRange {
    pub min: f64,
    pub max: f64,
}

impl LabelRange {
    pub fn contains(&self, y: f64) -> bool {
        self.min <= y && y <= self.max
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Mean interval width; errors on the first infinite interval.
pub fn length_loss(intervals: &[Interval]) -> Result<f64, LossError> {
    if intervals.is_empty() {
        return Err(LossError::EmptyInput);
    }
    for (index, iv) in intervals.iter().enumerate() {
        if !iv.width().is_finite() {
            return Err(LossError::InfiniteInterval { index });
        }
    }
    Ok(intervals.iter().map(Interval::width).sum::<f64>() / intervals.len() as f64)
}

/// Hard average length under self-calibration: the mean width of the
/// intervals built from the hard quantile of this data's own scores.
/// Returns +∞ when the quantile is infinite.
pub fn hard_length_loss(params: &ScoreParams<'_>, y: &[f64], alpha: f64) -> Result<f64, LossError> {
    let scores = params.scores(y).map_err(|_| LossError::LengthMismatch(params.len(), y.len()))?;
    let q = conformal::calibrate(&scores, alpha)?;
    if !q.is_finite() {
        return Ok(f64::INFINITY);
    }
    length_loss(&conformal::intervals(params, &q))
}

/// Smooth average length 2·σ̄·Q^s of the self-scores, with its gradient.
pub fn smooth_length_grad(
    mu: &[f64],
    log_sigma: &[f64],
    y: &[f64],
    alpha: f64,
) -> Result<LossGrad, LossError> {
    let hd = hd_weights(y.len().max(1), alpha)?;
    smooth_length_grad_with_weights(mu, log_sigma, y, &hd)
}

/// As [`smooth_length_grad`] with precomputed Harrell-Davis weights (they
/// depend only on the sample count and level).
pub fn smooth_length_grad_with_weights(
    mu: &[f64],
    log_sigma: &[f64],
    y: &[f64],
    hd: &HdWeights,
) -> Result<LossGrad, LossError> {
    let n = y.len();
    if n == 0 {
        return Err(LossError::EmptyInput);
    }
    if mu.len() != n || log_sigma.len() != n {
        return Err(LossError::LengthMismatch(mu.len(), n));
    }
    let sigma: Vec<f64> = log_sigma.iter().map(|&s| s.exp()).collect();
    let scores: Vec<f64> = (0..n).map(|i| (y[i] - mu[i]).abs() / sigma[i]).collect();
    let q = smooth_quantile_with_weights(&scores, hd)?;
    let sigma_bar = sigma.iter().sum::<f64>() / n as f64;

    let loss = 2.0 * sigma_bar * q.value;
    let mut d_mu = vec![0.0; n];
    let mut d_log_sigma = vec![0.0; n];
    for i in 0..n {
        d_mu[i] = -2.0 * sigma_bar * q.grad[i] * sign(y[i] - mu[i]) / sigma[i];
        // Two pathways: σ̄ grows with σ_i, while E_i shrinks with σ_i.
        d_log_sigma[i] =
            2.0 * sigma[i] * q.value / n as f64 - 2.0 * sigma_bar * q.grad[i] * scores[i];
    }
    Ok(LossGrad { loss, d_mu, d_log_sigma })
}

/// Hard maximum within-leaf deviation under self-calibration: build
/// intervals from the hard quantile of this data's own scores, fit a
/// contrast tree to the coverage indicators, return its maximum deviation.
pub fn hard_condcov_loss(
    x: &FeatureMatrix,
    params: &ScoreParams<'_>,
    y: &[f64],
    alpha: f64,
    max_leaves: usize,
    min_leaf: usize,
) -> Result<f64, LossError> {
    let scores = params.scores(y).map_err(|_| LossError::LengthMismatch(params.len(), y.len()))?;
    let q = conformal::calibrate(&scores, alpha)?;
    let intervals = conformal::intervals(params, &q);
    let covered = CoverageIndicators::from_intervals(&intervals, y);
    let tree = contrast_tree::fit_contrast_tree(x, &covered, alpha, max_leaves, min_leaf)?;
    Ok(tree.fit_max_deviation())
}

/// Smooth per-sample coverage values S(u_j - y_j)·S(y_j - l_j) where the
/// interval limits use the smooth quantile of the self-scores.
pub fn smooth_coverage(
    mu: &[f64],
    log_sigma: &[f64],
    y: &[f64],
    alpha: f64,
    sp: &SmoothingParams,
) -> Result<Vec<f64>, LossError> {
    let n = y.len();
    if n == 0 {
        return Err(LossError::EmptyInput);
    }
    let sigma: Vec<f64> = log_sigma.iter().map(|&s| s.exp()).collect();
    let scores: Vec<f64> = (0..n).map(|i| (y[i] - mu[i]).abs() / sigma[i]).collect();
    let q = smooth_quantile_with_weights(&scores, &hd_weights(n, alpha)?)?;
    Ok((0..n)
        .map(|j| {
            let upper = mu[j] + q.value * sigma[j];
            let lower = mu[j] - q.value * sigma[j];
            sigmoid(sp.tau1 * (upper - y[j])) * sigmoid(sp.tau1 * (y[j] - lower))
        })
        .collect())
}

/// Smooth maximum conditional-coverage deviation over a fixed partition,
/// with its full gradient.
///
/// loss = τ₂⁻¹ · log Σ_m exp(τ₂·|mean_{j∈R_m} c_j - (1-α)|) where
/// c_j = S(u_j - y_j)·S(y_j - l_j), u/l = μ ± Q^s·σ, and Q^s is the smooth
/// quantile of the self-scores. The gradient includes the coupling of every
/// sample through Q^s.
pub fn smooth_condcov_grad(
    mu: &[f64],
    log_sigma: &[f64],
    y: &[f64],
    alpha: f64,
    leaf_labels: &[usize],
    sp: &SmoothingParams,
) -> Result<LossGrad, LossError> {
    let hd = hd_weights(y.len().max(1), alpha)?;
    smooth_condcov_grad_with_weights(mu, log_sigma, y, alpha, leaf_labels, sp, &hd)
}

/// As [`smooth_condcov_grad`] with precomputed Harrell-Davis weights.
pub fn smooth_condcov_grad_with_weights(
    mu: &[f64],
    log_sigma: &[f64],
    y: &[f64],
    alpha: f64,
    leaf_labels: &[usize],
    sp: &SmoothingParams,
    hd: &HdWeights,
) -> Result<LossGrad, LossError> {
    let n = y.len();
    if n == 0 {
        return Err(LossError::EmptyInput);
    }
    if mu.len() != n || log_sigma.len() != n || leaf_labels.len() != n {
        return Err(LossError::LengthMismatch(mu.len(), n));
    }
    let n_parts = leaf_labels.iter().max().map_or(0, |&m| m + 1);
    let mut part_sizes = vec![0usize; n_parts];
    for &label in leaf_labels {
        part_sizes[label] += 1;
    }
    if let Some(part) = part_sizes.iter().position(|&s| s == 0) {
        return Err(LossError::EmptyPart { part });
    }

    let sigma: Vec<f64> = log_sigma.iter().map(|&s| s.exp()).collect();
    let scores: Vec<f64> = (0..n).map(|i| (y[i] - mu[i]).abs() / sigma[i]).collect();
    let q = smooth_quantile_with_weights(&scores, hd)?;
    let target = 1.0 - alpha;

    // Per-sample smooth indicators and their endpoint sensitivities.
    let mut coverage = vec![0.0; n];
    let mut d_upper = vec![0.0; n]; // ∂c_j/∂u_j
    let mut d_lower_neg = vec![0.0; n]; // -∂c_j/∂l_j
    for j in 0..n {
        let upper = mu[j] + q.value * sigma[j];
        let lower = mu[j] - q.value * sigma[j];
        let a = sigmoid(sp.tau1 * (upper - y[j]));
        let b = sigmoid(sp.tau1 * (y[j] - lower));
        coverage[j] = a * b;
        d_upper[j] = sp.tau1 * a * (1.0 - a) * b;
        d_lower_neg[j] = sp.tau1 * a * b * (1.0 - b);
    }

    // Per-part deviations and the stabilized log-sum-exp.
    let mut part_means = vec![0.0; n_parts];
    for j in 0..n {
        part_means[leaf_labels[j]] += coverage[j];
    }
    let mut deviations = vec![0.0; n_parts];
    for m in 0..n_parts {
        part_means[m] /= part_sizes[m] as f64;
        deviations[m] = (part_means[m] - target).abs();
    }
    let max_dev = deviations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp_sum: f64 = deviations.iter().map(|&d| (sp.tau2 * (d - max_dev)).exp()).sum();
    let loss = max_dev + exp_sum.ln() / sp.tau2;

    // Softmax weight of each part times the abs-value subgradient, spread
    // over that part's samples.
    let mut part_coef = vec![0.0; n_parts];
    for m in 0..n_parts {
        let softmax = (sp.tau2 * (deviations[m] - max_dev)).exp() / exp_sum;
        part_coef[m] = softmax * sign(part_means[m] - target) / part_sizes[m] as f64;
    }
    let gamma: Vec<f64> = (0..n).map(|j| part_coef[leaf_labels[j]]).collect();

    // Coupling of every sample through the smooth quantile:
    // ∂loss/∂Q = Σ_j γ_j σ_j (∂c_j/∂u_j - ∂c_j/∂l_j).
    let quantile_coef: f64 = (0..n)
        .map(|j| gamma[j] * sigma[j] * (d_upper[j] + d_lower_neg[j]))
        .sum();

    let mut d_mu = vec![0.0; n];
    let mut d_log_sigma = vec![0.0; n];
    for i in 0..n {
        let dscore_dmu = -sign(y[i] - mu[i]) / sigma[i];
        let dscore_dls = -scores[i];
        d_mu[i] = gamma[i] * (d_upper[i] - d_lower_neg[i]) + quantile_coef * q.grad[i] * dscore_dmu;
        d_log_sigma[i] = gamma[i] * q.value * sigma[i] * (d_upper[i] + d_lower_neg[i])
            + quantile_coef * q.grad[i] * dscore_dls;
    }
    Ok(LossGrad { loss, d_mu, d_log_sigma })
}

/// Maximum absolute coverage deviation over prespecified index groups.
pub fn group_condcov_loss(
    covered: &CoverageIndicators,
    groups: &[Vec<usize>],
    alpha: f64,
) -> Result<f64, LossError> {
    if groups.is_empty() {
        return Err(LossError::EmptyInput);
    }
    let mut max_dev = f64::NEG_INFINITY;
    for (g, idx) in groups.iter().enumerate() {
        let dev = contrast_tree::group_deviation(covered, idx, alpha)
            .map_err(|_| LossError::EmptyGroup { group: g })?;
        max_dev = max_dev.max(dev);
    }
    Ok(max_dev)
}

/// Weighted sum over label groups of the mean interval length of samples
/// whose response falls in the group. Groups with no members contribute 0.
pub fn group_length_loss(
    intervals: &[Interval],
    y: &[f64],
    label_groups: &[LabelRange],
    weights: &[f64],
) -> Result<f64, LossError> {
    if intervals.len() != y.len() {
        return Err(LossError::LengthMismatch(intervals.len(), y.len()));
    }
    if weights.len() != label_groups.len() {
        return Err(LossError::WeightCountMismatch {
            count: weights.len(),
            groups: label_groups.len(),
        });
    }
    for (index, iv) in intervals.iter().enumerate() {
        if !iv.width().is_finite() {
            return Err(LossError::InfiniteInterval { index });
        }
    }
    let mut total = 0.0;
    for (group, weight) in label_groups.iter().zip(weights) {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (iv, &yi) in intervals.iter().zip(y) {
            if group.contains(yi) {
                sum += iv.width();
                count += 1;
            }
        }
        if count > 0 {
            total += weight * sum / count as f64;
        }
    }
    Ok(total)
}
