//! Gradient boosting over depth-1 regression trees (stumps).
//!
//! The booster is first-order: each round a caller-supplied callback returns
//! loss gradients with respect to per-sample (μ_i, log σ_i), one stump is fit
//! by least squares to each negated gradient vector, and both predictions
//! advance by `learning_rate` times the stump output. Candidate thresholds
//! come from a per-feature grid of at most 64 empirical quantile cuts,
//! computed once per boosting run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::FeatureMatrix;
use crate::losses::{LossError, LossGrad};

#[derive(Debug, Error)]
pub enum GbmError {
    #[error("need at least 2 rows to fit a stump, got {0}")]
    TooFewRows(usize),
    #[error("non-finite target at position {0}")]
    NonFiniteTarget(usize),
    #[error("non-finite gradient for {which} at round {round}, component {component}")]
    NonFiniteGradient {
        round: usize,
        component: usize,
        which: &'static str,
    },
    #[error("feature count mismatch: model expects {expected}, got {got}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("init vectors of length {got}, expected {expected}")]
    BadInitLength { expected: usize, got: usize },
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// A depth-1 regression tree: rows go left when `x[feature] <= threshold`.
///
/// A degenerate stump (no valid split) uses threshold -∞, routing every row
/// right with both values equal to the target mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left_value: f64,
    pub right_value: f64,
}

impl Stump {
    #[inline]
    pub fn eval(&self, row: &[f64]) -> f64 {
        if row[self.feature] <= self.threshold {
            self.left_value
        } else {
            self.right_value
        }
    }
}

/// Per-feature candidate thresholds (at most 64 empirical quantile cuts,
/// excluding each feature's maximum).
#[derive(Debug, Clone)]
pub struct CutGrid {
    cuts: Vec<Vec<f64>>,
}

impl CutGrid {
    pub fn from_matrix(x: &FeatureMatrix, max_cuts: usize) -> Self {
        let cuts = (0..x.n_cols())
            .map(|f| {
                let mut values = x.column(f);
                values.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = values.len();
                if n < 2 {
                    return Vec::new();
                }
                let max_value = values[n - 1];
                let mut out = Vec::new();
                if n <= max_cuts + 1 {
                    for &v in &values {
                        if v < max_value && out.last() != Some(&v) {
                            out.push(v);
                        }
                    }
                } else {
                    for k in 1..=max_cuts {
                        let v = values[(k * n / (max_cuts + 1)).min(n - 1)];
                        if v < max_value && out.last() != Some(&v) {
                            out.push(v);
                        }
                    }
                }
                out
            })
            .collect();
        CutGrid { cuts }
    }

    pub fn feature_cuts(&self, feature: usize) -> &[f64] {
        &self.cuts[feature]
    }
}

#[derive(Debug, Clone, Copy)]
struct StumpCandidate {
    gain: f64,
    threshold: f64,
    left_sum: f64,
    left_count: usize,
}

fn best_split_on_feature(
    x: &FeatureMatrix,
    targets: &[f64],
    feature: usize,
    cuts: &[f64],
    total_sum: f64,
) -> Option<StumpCandidate> {
    if cuts.is_empty() {
        return None;
    }
    let n = targets.len();
    // Bucket b = number of cuts strictly below x, so x <= cuts[j] iff b <= j.
    let m = cuts.len();
    let mut count = vec![0usize; m + 1];
    let mut sum = vec![0.0f64; m + 1];
    for i in 0..n {
        let v = x.get(i, feature);
        let b = cuts.partition_point(|&c| c < v);
        count[b] += 1;
        sum[b] += targets[i];
    }
    let mut best: Option<StumpCandidate> = None;
    let mut left_count = 0usize;
    let mut left_sum = 0.0f64;
    for j in 0..m {
        left_count += count[j];
        left_sum += sum[j];
        let right_count = n - left_count;
        if left_count == 0 || right_count == 0 {
            continue;
        }
        let right_sum = total_sum - left_sum;
        let gain = left_sum * left_sum / left_count as f64
            + right_sum * right_sum / right_count as f64;
        // Strict improvement keeps the lowest threshold on ties.
        if best.map_or(true, |b| gain > b.gain) {
            best = Some(StumpCandidate { gain, threshold: cuts[j], left_sum, left_count });
        }
    }
    best
}

fn fit_stump_on_grid(x: &FeatureMatrix, targets: &[f64], grid: &CutGrid) -> Stump {
    let n = targets.len();
    let total_sum: f64 = targets.iter().sum();
    let mean = total_sum / n as f64;

    // Ordered collect keeps the reduction independent of thread count.
    let per_feature: Vec<Option<StumpCandidate>> = (0..x.n_cols())
        .into_par_iter()
        .map(|f| best_split_on_feature(x, targets, f, grid.feature_cuts(f), total_sum))
        .collect();

    let mut best: Option<(usize, StumpCandidate)> = None;
    for (feature, cand) in per_feature.into_iter().enumerate() {
        if let Some(cand) = cand {
            // Strict improvement keeps the lowest feature index on ties.
            if best.map_or(true, |(_, b)| cand.gain > b.gain) {
                best = Some((feature, cand));
            }
        }
    }
    match best {
        Some((feature, cand)) => {
            let right_count = n - cand.left_count;
            Stump {
                feature,
                threshold: cand.threshold,
                left_value: cand.left_sum / cand.left_count as f64,
                right_value: (total_sum - cand.left_sum) / right_count as f64,
            }
        }
        // No admissible split anywhere: a single-leaf stump at the mean.
        None => Stump {
            feature: 0,
            threshold: f64::NEG_INFINITY,
            left_value: mean,
            right_value: mean,
        },
    }
}

/// Least-squares stump for the given targets, searching a fresh ≤64-cut
/// quantile grid per feature.
pub fn fit_stump(x: &FeatureMatrix, targets: &[f64]) -> Result<Stump, GbmError> {
    if targets.len() < 2 || x.n_rows() < 2 {
        return Err(GbmError::TooFewRows(targets.len().min(x.n_rows())));
    }
    if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
        return Err(GbmError::NonFiniteTarget(i));
    }
    Ok(fit_stump_on_grid(x, targets, &CutGrid::from_matrix(x, 64)))
}

/// Single-output additive stump model with a constant base offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub base: f64,
    pub stumps: Vec<Stump>,
    pub learning_rate: f64,
}

impl GbmModel {
    pub fn constant(value: f64) -> Self {
        GbmModel { base: value, stumps: Vec::new(), learning_rate: 0.0 }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut out = self.base;
        for stump in &self.stumps {
            out += self.learning_rate * stump.eval(row);
        }
        out
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    /// Squared-error boosting: base is the target mean, each round fits a
    /// stump to the current residuals.
    pub fn fit_least_squares(
        x: &FeatureMatrix,
        y: &[f64],
        rounds: usize,
        learning_rate: f64,
    ) -> Result<Self, GbmError> {
        if y.len() < 2 {
            return Err(GbmError::TooFewRows(y.len()));
        }
        let grid = CutGrid::from_matrix(x, 64);
        let base = y.iter().sum::<f64>() / y.len() as f64;
        let mut pred = vec![base; y.len()];
        let mut stumps = Vec::with_capacity(rounds);
        let mut residual = vec![0.0; y.len()];
        for _ in 0..rounds {
            for i in 0..y.len() {
                residual[i] = y[i] - pred[i];
            }
            let stump = fit_stump_on_grid(x, &residual, &grid);
            for i in 0..y.len() {
                pred[i] += learning_rate * stump.eval(x.row(i));
            }
            stumps.push(stump);
        }
        Ok(GbmModel { base, stumps, learning_rate })
    }

    /// Pinball-loss boosting toward the `beta` conditional quantile: base is
    /// the empirical `beta` quantile, each round fits a stump to the pinball
    /// descent direction (β above the prediction, β-1 below, 0 on exact
    /// residual zero so already-fit constants stay put).
    pub fn fit_pinball(
        x: &FeatureMatrix,
        y: &[f64],
        beta: f64,
        rounds: usize,
        learning_rate: f64,
    ) -> Result<Self, GbmError> {
        let n = y.len();
        if n < 2 {
            return Err(GbmError::TooFewRows(n));
        }
        let mut sorted = y.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k = ((beta * n as f64).ceil() as usize).clamp(1, n);
        let base = sorted[k - 1];

        let grid = CutGrid::from_matrix(x, 64);
        let mut pred = vec![base; n];
        let mut stumps = Vec::with_capacity(rounds);
        let mut direction = vec![0.0; n];
        for _ in 0..rounds {
            for i in 0..n {
                let r = y[i] - pred[i];
                direction[i] = if r > 0.0 {
                    beta
                } else if r < 0.0 {
                    beta - 1.0
                } else {
                    0.0
                };
            }
            let stump = fit_stump_on_grid(x, &direction, &grid);
            for i in 0..n {
                pred[i] += learning_rate * stump.eval(x.row(i));
            }
            stumps.push(stump);
        }
        Ok(GbmModel { base, stumps, learning_rate })
    }
}

/// An evaluable base offset for one boosted output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseFn {
    Constant(f64),
    Model(GbmModel),
    /// ln(max(model(x), floor)) — a dispersion model carried in log space.
    LogFloored { model: GbmModel, floor: f64 },
    /// (lower(x) + max(upper(x), lower(x))) / 2 — quantile-pair midpoint.
    QuantileMidpoint { lower: GbmModel, upper: GbmModel },
    /// ln(max((max(upper(x), lower(x)) - lower(x)) / 2, floor)).
    QuantileLogHalfWidth {
        lower: GbmModel,
        upper: GbmModel,
        floor: f64,
    },
}

impl BaseFn {
    pub fn eval_row(&self, row: &[f64]) -> f64 {
        match self {
            BaseFn::Constant(v) => *v,
            BaseFn::Model(m) => m.predict_row(row),
            BaseFn::LogFloored { model, floor } => model.predict_row(row).max(*floor).ln(),
            BaseFn::QuantileMidpoint { lower, upper } => {
                let lo = lower.predict_row(row);
                let hi = upper.predict_row(row).max(lo);
                0.5 * (lo + hi)
            }
            BaseFn::QuantileLogHalfWidth { lower, upper, floor } => {
                let lo = lower.predict_row(row);
                let hi = upper.predict_row(row).max(lo);
                (0.5 * (hi - lo)).max(*floor).ln()
            }
        }
    }

    pub fn eval(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.eval_row(x.row(i))).collect()
    }
}

/// The pair of stumps added in one boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub mu: Stump,
    pub log_sigma: Stump,
}

/// An ordered record of boosting rounds; entry t of the trajectory is the
/// model after the first t rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub rounds: Vec<BoostRound>,
    pub learning_rate: f64,
}

impl Trajectory {
    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Add the contribution of round `t` (1-based) to running predictions.
    pub fn apply_round(&self, t: usize, x: &FeatureMatrix, mu: &mut [f64], log_sigma: &mut [f64]) {
        let round = &self.rounds[t - 1];
        for i in 0..x.n_rows() {
            let row = x.row(i);
            mu[i] += self.learning_rate * round.mu.eval(row);
            log_sigma[i] += self.learning_rate * round.log_sigma.eval(row);
        }
    }

    /// Predictions after the first `t` rounds, starting from the given
    /// initial values.
    pub fn predict_at(
        &self,
        t: usize,
        x: &FeatureMatrix,
        init_mu: &[f64],
        init_log_sigma: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let mut mu = init_mu.to_vec();
        let mut ls = init_log_sigma.to_vec();
        for round in 1..=t {
            self.apply_round(round, x, &mut mu, &mut ls);
        }
        (mu, ls)
    }

    pub fn truncate(&self, t: usize) -> Trajectory {
        Trajectory {
            rounds: self.rounds[..t].to_vec(),
            learning_rate: self.learning_rate,
        }
    }
}

/// Additive model of both score components over a shared base offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub base_mu: BaseFn,
    pub base_log_sigma: BaseFn,
    pub stumps_mu: Vec<Stump>,
    pub stumps_log_sigma: Vec<Stump>,
    pub learning_rate: f64,
    pub n_features: usize,
}

impl Ensemble {
    pub fn from_trajectory(
        base_mu: BaseFn,
        base_log_sigma: BaseFn,
        trajectory: &Trajectory,
        t: usize,
        n_features: usize,
    ) -> Ensemble {
        Ensemble {
            base_mu,
            base_log_sigma,
            stumps_mu: trajectory.rounds[..t].iter().map(|r| r.mu).collect(),
            stumps_log_sigma: trajectory.rounds[..t].iter().map(|r| r.log_sigma).collect(),
            learning_rate: trajectory.learning_rate,
            n_features,
        }
    }

    /// (μ, log σ) on every row; stump outputs are summed in insertion order.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<(Vec<f64>, Vec<f64>), GbmError> {
        if x.n_cols() != self.n_features {
            return Err(GbmError::FeatureMismatch { expected: self.n_features, got: x.n_cols() });
        }
        let mut mu = Vec::with_capacity(x.n_rows());
        let mut log_sigma = Vec::with_capacity(x.n_rows());
        for i in 0..x.n_rows() {
            let row = x.row(i);
            let mut m = self.base_mu.eval_row(row);
            for stump in &self.stumps_mu {
                m += self.learning_rate * stump.eval(row);
            }
            let mut s = self.base_log_sigma.eval_row(row);
            for stump in &self.stumps_log_sigma {
                s += self.learning_rate * stump.eval(row);
            }
            mu.push(m);
            log_sigma.push(s);
        }
        Ok((mu, log_sigma))
    }
}

/// Gradient callback: current per-sample (μ, log σ) to loss and gradients.
pub type GradFn<'a> = dyn FnMut(&[f64], &[f64]) -> Result<LossGrad, LossError> + 'a;

fn check_finite(
    values: &[f64],
    round: usize,
    which: &'static str,
) -> Result<(), GbmError> {
    if let Some(component) = values.iter().position(|v| !v.is_finite()) {
        return Err(GbmError::NonFiniteGradient { round, component, which });
    }
    Ok(())
}

/// Run `rounds` boosting iterations from the given initial component values.
///
/// Round t fits one stump to -d_mu and one to -d_log_sigma at the current
/// predictions and advances both by `learning_rate` times the stump outputs.
pub fn boost_trajectory(
    x: &FeatureMatrix,
    init_mu: &[f64],
    init_log_sigma: &[f64],
    grad_fn: &mut GradFn<'_>,
    rounds: usize,
    learning_rate: f64,
) -> Result<Trajectory, GbmError> {
    let n = x.n_rows();
    if init_mu.len() != n || init_log_sigma.len() != n {
        return Err(GbmError::BadInitLength { expected: n, got: init_mu.len() });
    }
    let grid = CutGrid::from_matrix(x, 64);
    let mut mu = init_mu.to_vec();
    let mut log_sigma = init_log_sigma.to_vec();
    let mut out = Trajectory { rounds: Vec::with_capacity(rounds), learning_rate };
    for round in 0..rounds {
        let grad = grad_fn(&mu, &log_sigma)?;
        check_finite(&grad.d_mu, round, "d_mu")?;
        check_finite(&grad.d_log_sigma, round, "d_log_sigma")?;
        let neg_mu: Vec<f64> = grad.d_mu.iter().map(|g| -g).collect();
        let neg_ls: Vec<f64> = grad.d_log_sigma.iter().map(|g| -g).collect();
        let stump_mu = fit_stump_on_grid(x, &neg_mu, &grid);
        let stump_ls = fit_stump_on_grid(x, &neg_ls, &grid);
        for i in 0..n {
            let row = x.row(i);
            mu[i] += learning_rate * stump_mu.eval(row);
            log_sigma[i] += learning_rate * stump_ls.eval(row);
        }
        out.rounds.push(BoostRound { mu: stump_mu, log_sigma: stump_ls });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_feature(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn stump_splits_separable_targets() {
        let x = single_feature(&[0.0, 0.0, 1.0, 1.0]);
        let stump = fit_stump(&x, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!(stump.feature, 0);
        assert_eq!(stump.threshold, 0.0);
        assert_eq!(stump.left_value, 1.0);
        assert_eq!(stump.right_value, -1.0);
    }

    #[test]
    fn stump_constant_targets() {
        let x = single_feature(&[0.0, 1.0, 2.0, 3.0]);
        let stump = fit_stump(&x, &[2.5; 4]).unwrap();
        assert_eq!(stump.left_value, 2.5);
        assert_eq!(stump.right_value, 2.5);
        for v in [0.0, 1.5, 10.0] {
            assert_eq!(stump.eval(&[v]), 2.5);
        }
    }

    #[test]
    fn stump_reduces_sse_on_linear_targets() {
        let values: Vec<f64> = (0..100).map(|i| i as f64 / 10.0).collect();
        let x = single_feature(&values);
        let stump = fit_stump(&x, &values).unwrap();
        let mean = values.iter().sum::<f64>() / 100.0;
        let sse_const: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let sse_split: f64 = values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - stump.eval(x.row(i))).powi(2))
            .sum();
        assert!(sse_split < sse_const);
    }

    #[test]
    fn stump_degenerate_rows() {
        // All rows identical: no valid split, single-leaf stump at the mean.
        let x = single_feature(&[3.0; 5]);
        let stump = fit_stump(&x, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(stump.threshold, f64::NEG_INFINITY);
        assert_eq!(stump.eval(&[3.0]), 3.0);
        assert_eq!(stump.eval(&[-100.0]), 3.0);

        assert!(matches!(
            fit_stump(&single_feature(&[1.0]), &[1.0]),
            Err(GbmError::TooFewRows(1))
        ));
        assert!(matches!(
            fit_stump(&x, &[1.0, f64::NAN, 3.0, 4.0, 5.0]),
            Err(GbmError::NonFiniteTarget(1))
        ));
    }

    #[test]
    fn least_squares_fits_step_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = single_feature(&values);
        let y: Vec<f64> = values.iter().map(|&v| if v > 0.5 { 2.0 } else { -1.0 }).collect();
        let model = GbmModel::fit_least_squares(&x, &y, 50, 0.3).unwrap();
        let pred = model.predict(&x);
        let mse: f64 =
            y.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
        assert!(mse < 0.05, "mse {mse}");
    }

    #[test]
    fn pinball_constant_response_stays_constant() {
        let x = single_feature(&[0.0, 1.0, 2.0, 3.0]);
        let y = vec![5.0; 4];
        for beta in [0.05, 0.5, 0.95] {
            let model = GbmModel::fit_pinball(&x, &y, beta, 30, 0.1).unwrap();
            for p in model.predict(&x) {
                assert_eq!(p, 5.0, "beta {beta}");
            }
        }
    }

    #[test]
    fn pinball_gaussian_quantile() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 10_000;
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = single_feature(&values);
        let y: Vec<f64> = (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let model = GbmModel::fit_pinball(&x, &y, 0.95, 40, 0.1).unwrap();
        // No signal: the fit should hover near the N(0,1) 0.95 quantile.
        let pred = model.predict(&x);
        let mean_pred = pred.iter().sum::<f64>() / n as f64;
        assert!((mean_pred - 1.6448536269514722).abs() < 0.1, "mean {mean_pred}");
    }

    #[test]
    fn boost_zero_rounds_is_identity() {
        let x = single_feature(&[0.0, 1.0, 2.0]);
        let init_mu = vec![1.0, 2.0, 3.0];
        let init_ls = vec![0.1, 0.2, 0.3];
        let mut grad = |_: &[f64], _: &[f64]| -> Result<LossGrad, LossError> {
            panic!("must not be called for T=0")
        };
        let traj = boost_trajectory(&x, &init_mu, &init_ls, &mut grad, 0, 0.1).unwrap();
        assert_eq!(traj.n_rounds(), 0);
        let (mu, ls) = traj.predict_at(0, &x, &init_mu, &init_ls);
        assert_eq!(mu, init_mu);
        assert_eq!(ls, init_ls);
    }

    #[test]
    fn boost_quadratic_loss_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = single_feature(&values);
        let y: Vec<f64> = values.iter().map(|&v| 3.0 * v - 1.0).collect();
        let mut losses = Vec::new();
        let y_ref = y.clone();
        let mut grad = move |mu: &[f64], _ls: &[f64]| -> Result<LossGrad, LossError> {
            let loss: f64 = mu.iter().zip(&y_ref).map(|(m, yi)| (m - yi).powi(2)).sum();
            let d_mu: Vec<f64> = mu.iter().zip(&y_ref).map(|(m, yi)| 2.0 * (m - yi)).collect();
            Ok(LossGrad { loss, d_mu, d_log_sigma: vec![0.0; mu.len()] })
        };
        let init = vec![0.0; n];
        let traj = boost_trajectory(&x, &init, &init, &mut grad, 40, 0.5).unwrap();
        // Replay the trajectory to collect the per-round loss.
        let mut mu = init.clone();
        let mut ls = init.clone();
        for t in 1..=traj.n_rounds() {
            let before: f64 = mu.iter().zip(&y).map(|(m, yi)| (m - yi).powi(2)).sum();
            traj.apply_round(t, &x, &mut mu, &mut ls);
            let after: f64 = mu.iter().zip(&y).map(|(m, yi)| (m - yi).powi(2)).sum();
            losses.push((before, after));
        }
        for (t, (before, after)) in losses.iter().enumerate() {
            assert!(after < before || *before < 1e-18, "round {t}: {before} -> {after}");
        }
    }

    #[test]
    fn boost_zero_gradients_are_noops() {
        let x = single_feature(&[0.0, 1.0, 2.0, 3.0]);
        let init_mu = vec![1.0, 2.0, 3.0, 4.0];
        let init_ls = vec![0.0; 4];
        let mut grad = |mu: &[f64], _: &[f64]| -> Result<LossGrad, LossError> {
            Ok(LossGrad {
                loss: 0.0,
                d_mu: vec![0.0; mu.len()],
                d_log_sigma: vec![0.0; mu.len()],
            })
        };
        let traj = boost_trajectory(&x, &init_mu, &init_ls, &mut grad, 5, 0.1).unwrap();
        let (mu, ls) = traj.predict_at(5, &x, &init_mu, &init_ls);
        assert_eq!(mu, init_mu);
        assert_eq!(ls, init_ls);
    }

    #[test]
    fn boost_aborts_on_non_finite_gradient() {
        let x = single_feature(&[0.0, 1.0, 2.0]);
        let init = vec![0.0; 3];
        let mut round_count = 0usize;
        let mut grad = move |mu: &[f64], _: &[f64]| -> Result<LossGrad, LossError> {
            round_count += 1;
            let mut d_mu = vec![0.1; mu.len()];
            if round_count == 3 {
                d_mu[1] = f64::NAN;
            }
            Ok(LossGrad { loss: 0.0, d_mu, d_log_sigma: vec![0.0; mu.len()] })
        };
        let err = boost_trajectory(&x, &init, &init, &mut grad, 10, 0.1).unwrap_err();
        match err {
            GbmError::NonFiniteGradient { round, component, which } => {
                assert_eq!(round, 2);
                assert_eq!(component, 1);
                assert_eq!(which, "d_mu");
            }
            other => panic!("unexpected {other}"),
        }
    }

    fn toy_grad<'a>(y: &'a [f64]) -> impl FnMut(&[f64], &[f64]) -> Result<LossGrad, LossError> + 'a {
        move |mu: &[f64], ls: &[f64]| {
            let d_mu: Vec<f64> = mu.iter().zip(y).map(|(m, yi)| m - yi).collect();
            let d_ls: Vec<f64> = ls.iter().map(|s| 0.5 * s).collect();
            Ok(LossGrad { loss: 0.0, d_mu, d_log_sigma: d_ls })
        }
    }

    #[test]
    fn trajectory_prefix_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 150;
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = single_feature(&values);
        let y: Vec<f64> = values.iter().map(|&v| v * v).collect();
        let init = vec![0.0; n];

        let long = boost_trajectory(&x, &init, &init, &mut toy_grad(&y), 12, 0.2).unwrap();
        let short = boost_trajectory(&x, &init, &init, &mut toy_grad(&y), 5, 0.2).unwrap();
        assert_eq!(long.truncate(5), short);
        let (mu_long, _) = long.predict_at(5, &x, &init, &init);
        let (mu_short, _) = short.predict_at(5, &x, &init, &init);
        assert_eq!(mu_long, mu_short);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 300;
        let p = 4;
        let values: Vec<f64> = (0..n * p).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = FeatureMatrix::new(n, p, values).unwrap();
        let y: Vec<f64> = (0..n).map(|i| x.get(i, 0) - x.get(i, 2)).collect();
        let init = vec![0.0; n];

        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                boost_trajectory(&x, &init, &init, &mut toy_grad(&y), 10, 0.3).unwrap()
            })
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn ensemble_predict_matches_trajectory_and_serializes() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 120;
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let x = single_feature(&values);
        let y: Vec<f64> = values.iter().map(|&v| (6.0 * v).sin()).collect();
        let base_mu = GbmModel::fit_least_squares(&x, &y, 5, 0.2).unwrap();
        let init_mu = base_mu.predict(&x);
        let init_ls = vec![0.0; n];

        let traj = boost_trajectory(&x, &init_mu, &init_ls, &mut toy_grad(&y), 7, 0.1).unwrap();
        for t in [0usize, 3, 7] {
            let ens = Ensemble::from_trajectory(
                BaseFn::Model(base_mu.clone()),
                BaseFn::Constant(0.0),
                &traj,
                t,
                1,
            );
            let (mu_e, ls_e) = ens.predict(&x).unwrap();
            let (mu_t, ls_t) = traj.predict_at(t, &x, &init_mu, &init_ls);
            for i in 0..n {
                assert!((mu_e[i] - mu_t[i]).abs() < 1e-12);
                assert!((ls_e[i] - ls_t[i]).abs() < 1e-12);
            }
        }

        let ens = Ensemble::from_trajectory(
            BaseFn::Model(base_mu),
            BaseFn::Constant(0.0),
            &traj,
            7,
            1,
        );
        let json = serde_json::to_string(&ens).unwrap();
        let back: Ensemble = serde_json::from_str(&json).unwrap();
        assert_eq!(ens, back);

        // Dimension mismatch is rejected.
        let bad = FeatureMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(ens.predict(&bad), Err(GbmError::FeatureMismatch { .. })));
    }

    #[test]
    fn base_fn_variants_evaluate() {
        let model = GbmModel::constant(2.0);
        assert_eq!(BaseFn::Constant(7.0).eval_row(&[0.0]), 7.0);
        assert_eq!(BaseFn::Model(model.clone()).eval_row(&[0.0]), 2.0);
        let lf = BaseFn::LogFloored { model: GbmModel::constant(-1.0), floor: 0.5 };
        assert_eq!(lf.eval_row(&[0.0]), 0.5f64.ln());
        let mid = BaseFn::QuantileMidpoint {
            lower: GbmModel::constant(1.0),
            upper: GbmModel::constant(3.0),
        };
        assert_eq!(mid.eval_row(&[0.0]), 2.0);
        // Crossing pair: upper clamps to lower, width floors at `floor`.
        let crossed = BaseFn::QuantileLogHalfWidth {
            lower: GbmModel::constant(3.0),
            upper: GbmModel::constant(1.0),
            floor: 0.25,
        };
        assert_eq!(crossed.eval_row(&[0.0]), 0.25f64.ln());
    }
}
