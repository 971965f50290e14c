//! End-to-end orchestration: baseline fitting, cross-validated selection of
//! the boosting round count, final boosting, and calibration.
//!
//! The procedure splits the data into a training part I1 and a calibration
//! part I2, fits baseline score components on I1, boosts them on I1 with the
//! round count chosen by k-fold cross-validation (simulating calibration on
//! each held-out fold with the hard task loss), and only then touches I2 to
//! calibrate the final score. Because boosting never reads I2, the marginal
//! coverage guarantee of split conformal carries over unchanged.
//!
//! Two-sided (quantile-pair) baselines are boosted through their equivalent
//! location/scale reduction: the pair (q_lo, q_hi) becomes
//! μ = (q_lo+q_hi)/2, σ = (q_hi-q_lo)/2, whose score is a strictly
//! increasing affine image of the width-rescaled two-sided score and so
//! yields identical intervals; the triple is recoverable pointwise after
//! boosting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::{self, CalibratedQuantile, ConformalError};
use crate::contrast_tree::{
    assign_leaves, default_min_leaf, fit_contrast_tree, CoverageIndicators, TreeError,
};
use crate::data::{self, DataError, Dataset, FeatureMatrix, SplitIndices};
use crate::gbm::{self, BaseFn, Ensemble, GbmError, GbmModel};
use crate::losses::{self, LossError, LossGrad, SmoothingParams};
use crate::scores::{ScoreError, ScoreParams};
use crate::smooth_quantile::hd_weights;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Gbm(#[from] GbmError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

/// Which score family the procedure starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Local,
    Cqr,
}

/// Which task loss drives the boosting stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Length,
    Condcov,
}

/// Full configuration of one boosted conformal run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    /// Target miscoverage level in (0, 1).
    pub alpha: f64,
    pub family: Family,
    pub objective: Objective,
    /// Cross-validation folds.
    pub k: usize,
    /// Maximum boosting rounds T.
    pub rounds: usize,
    pub learning_rate: f64,
    /// Sigmoid sharpness of the smooth coverage indicator.
    pub tau1: f64,
    /// Log-sum-exp sharpness of the smooth max.
    pub tau2: f64,
    /// Contrast-tree leaf budget M.
    pub max_leaves: usize,
    /// Minimum contrast-tree leaf size; `None` means max(50, ⌈0.05·n⌉).
    pub min_leaf: Option<usize>,
    /// Training fraction of the train/calibration split.
    pub gamma: f64,
    pub seed: u64,
    /// Rounds and learning rate of the baseline component fits.
    pub baseline_rounds: usize,
    pub baseline_learning_rate: f64,
    /// Ablation: replace the fitted dispersion baseline with its constant
    /// mean, so intervals start with location-independent width.
    pub constant_sigma_baseline: bool,
    /// Skip baselines entirely and boost from (μ ≡ 0, σ ≡ 1).
    pub direct_init: bool,
    /// Divide the response by its mean absolute value on the non-test rows
    /// before fitting (batch runs only).
    pub standardize: bool,
    /// Held-out test fraction (batch runs only).
    pub test_fraction: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            alpha: 0.1,
            family: Family::Local,
            objective: Objective::Length,
            k: 3,
            rounds: 500,
            learning_rate: 0.1,
            tau1: 50.0,
            tau2: 50.0,
            max_leaves: 8,
            min_leaf: None,
            gamma: 0.6,
            seed: 0,
            baseline_rounds: 100,
            baseline_learning_rate: 0.1,
            constant_sigma_baseline: false,
            direct_init: false,
            standardize: true,
            test_fraction: 0.2,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(PipelineError::BadConfig(msg.to_string()))
            }
        };
        check(self.alpha > 0.0 && self.alpha < 1.0, "alpha must be in (0, 1)")?;
        check(self.k >= 2, "k must be at least 2")?;
        check(self.learning_rate > 0.0, "learning_rate must be positive")?;
        check(self.tau1 > 0.0 && self.tau2 > 0.0, "tau1 and tau2 must be positive")?;
        check(self.max_leaves >= 1, "max_leaves must be at least 1")?;
        check(self.gamma > 0.0 && self.gamma < 1.0, "gamma must be in (0, 1)")?;
        check(
            self.baseline_learning_rate > 0.0,
            "baseline_learning_rate must be positive",
        )?;
        check(
            self.test_fraction > 0.0 && self.test_fraction < 1.0,
            "test_fraction must be in (0, 1)",
        )?;
        Ok(())
    }

    pub fn resolved_min_leaf(&self, n: usize) -> usize {
        self.min_leaf.unwrap_or_else(|| default_min_leaf(n))
    }
}

/// Independent sub-seed for a named stage, so stages draw from disjoint
/// streams of one user-facing seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const STREAM_SPLIT: u64 = 1;
pub const STREAM_KFOLD: u64 = 2;
pub const STREAM_TEST_HOLDOUT: u64 = 3;

/// Baseline location/dispersion models for the Local family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBaseline {
    pub mu: GbmModel,
    pub sigma_raw: GbmModel,
    /// Lower bound applied to the dispersion prediction.
    pub sigma_floor: f64,
}

impl LocalBaseline {
    pub fn base_fns(&self) -> (BaseFn, BaseFn) {
        (
            BaseFn::Model(self.mu.clone()),
            BaseFn::LogFloored { model: self.sigma_raw.clone(), floor: self.sigma_floor },
        )
    }

    pub fn predict_sigma(&self, x: &FeatureMatrix) -> Vec<f64> {
        self.sigma_raw
            .predict(x)
            .into_iter()
            .map(|v| v.max(self.sigma_floor))
            .collect()
    }
}

/// Fit μ0 by squared-error boosting on y and σ0 by squared-error boosting on
/// the absolute residuals |y - μ0(x)|, floored at 1e-3 times the mean
/// absolute residual so σ stays positive.
pub fn fit_baseline_local(
    train: &Dataset,
    cfg: &BoostConfig,
) -> Result<LocalBaseline, PipelineError> {
    let x = &train.features;
    let y = &train.response;
    let mu = GbmModel::fit_least_squares(x, y, cfg.baseline_rounds, cfg.baseline_learning_rate)?;
    let residuals: Vec<f64> = mu
        .predict(x)
        .into_iter()
        .zip(y)
        .map(|(m, yi)| (yi - m).abs())
        .collect();
    let mean_abs = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let sigma_floor = if mean_abs > 0.0 { 1e-3 * mean_abs } else { 1e-9 };
    let sigma_raw = if cfg.constant_sigma_baseline {
        GbmModel::constant(mean_abs)
    } else {
        GbmModel::fit_least_squares(x, &residuals, cfg.baseline_rounds, cfg.baseline_learning_rate)?
    };
    Ok(LocalBaseline { mu, sigma_raw, sigma_floor })
}

/// Baseline conditional-quantile pair for the two-sided family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqrBaseline {
    pub lower: GbmModel,
    pub upper: GbmModel,
    /// Lower bound applied to the half-width of the reduced pair.
    pub width_floor: f64,
}

impl CqrBaseline {
    /// Quantile predictions with the pointwise crossing fix applied.
    pub fn predict_pair(&self, x: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
        let lo = self.lower.predict(x);
        let hi: Vec<f64> = self
            .upper
            .predict(x)
            .into_iter()
            .zip(&lo)
            .map(|(h, &l)| h.max(l))
            .collect();
        (lo, hi)
    }

    /// The equivalent location/scale base functions (midpoint and floored
    /// log half-width).
    pub fn base_fns(&self) -> (BaseFn, BaseFn) {
        (
            BaseFn::QuantileMidpoint { lower: self.lower.clone(), upper: self.upper.clone() },
            BaseFn::QuantileLogHalfWidth {
                lower: self.lower.clone(),
                upper: self.upper.clone(),
                floor: self.width_floor,
            },
        )
    }
}

/// Fit the α/2 and 1-α/2 conditional quantiles by pinball boosting.
pub fn fit_baseline_cqr(
    train: &Dataset,
    alpha: f64,
    cfg: &BoostConfig,
) -> Result<CqrBaseline, PipelineError> {
    let x = &train.features;
    let y = &train.response;
    let lower = GbmModel::fit_pinball(
        x,
        y,
        alpha / 2.0,
        cfg.baseline_rounds,
        cfg.baseline_learning_rate,
    )?;
    let upper = GbmModel::fit_pinball(
        x,
        y,
        1.0 - alpha / 2.0,
        cfg.baseline_rounds,
        cfg.baseline_learning_rate,
    )?;
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = y.iter().map(|v| (v - y_mean).abs()).sum::<f64>() / y.len() as f64;
    let width_floor = if spread > 0.0 { 1e-3 * spread } else { 1e-9 };
    Ok(CqrBaseline { lower, upper, width_floor })
}

/// Rescale a gradient by the sample count before handing it to the booster.
///
/// The task losses are dataset means, so their per-sample gradients shrink
/// like 1/n and stump leaf means (and hence boosting steps) would vanish as
/// the data grows. Boosting on the sum-form gradient n·∇ℓ makes the step
/// size independent of n; the loss value itself stays on the mean scale.
fn sum_scaled(mut grad: LossGrad) -> LossGrad {
    let n = grad.d_mu.len() as f64;
    for g in &mut grad.d_mu {
        *g *= n;
    }
    for g in &mut grad.d_log_sigma {
        *g *= n;
    }
    grad
}

/// A boosting objective: produces the smooth gradient callback driving the
/// booster and evaluates the hard loss on held-out data.
pub trait BoostObjective: Sync {
    fn make_grad_fn<'a>(
        &'a self,
        x: &'a FeatureMatrix,
        y: &'a [f64],
        cfg: &BoostConfig,
    ) -> Box<dyn FnMut(&[f64], &[f64]) -> Result<LossGrad, LossError> + 'a>;

    /// Hard task loss on held-out data, self-calibrating the quantile on
    /// that data to simulate the calibration step.
    fn eval_hard(
        &self,
        x: &FeatureMatrix,
        y: &[f64],
        mu: &[f64],
        log_sigma: &[f64],
        cfg: &BoostConfig,
    ) -> Result<f64, PipelineError>;
}

/// Average-interval-length objective.
pub struct LengthObjective;

impl BoostObjective for LengthObjective {
    fn make_grad_fn<'a>(
        &'a self,
        _x: &'a FeatureMatrix,
        y: &'a [f64],
        cfg: &BoostConfig,
    ) -> Box<dyn FnMut(&[f64], &[f64]) -> Result<LossGrad, LossError> + 'a> {
        let alpha = cfg.alpha;
        let mut hd = None;
        Box::new(move |mu: &[f64], log_sigma: &[f64]| {
            let hd = match &hd {
                Some(w) => w,
                None => hd.insert(hd_weights(y.len(), alpha)?),
            };
            let grad = losses::smooth_length_grad_with_weights(mu, log_sigma, y, hd)?;
            Ok(sum_scaled(grad))
        })
    }

    fn eval_hard(
        &self,
        _x: &FeatureMatrix,
        y: &[f64],
        mu: &[f64],
        log_sigma: &[f64],
        _cfg: &BoostConfig,
    ) -> Result<f64, PipelineError> {
        let params = ScoreParams::Local { mu, log_sigma };
        Ok(losses::hard_length_loss(&params, y, _cfg.alpha)?)
    }
}

/// Conditional-coverage objective. The partition feeding the smooth loss is
/// refit from the current score's coverage indicators at round 0 and every
/// 10th round; between refits it is frozen.
pub struct CondcovObjective;

/// Contrast-tree partition of the rows under the current score, from the
/// hard self-calibrated coverage indicators. Falls back to a single part
/// when the data cannot support `min_leaf`.
fn current_partition(
    x: &FeatureMatrix,
    y: &[f64],
    mu: &[f64],
    log_sigma: &[f64],
    alpha: f64,
    max_leaves: usize,
    min_leaf: usize,
) -> Result<Vec<usize>, LossError> {
    let params = ScoreParams::Local { mu, log_sigma };
    let scores = params
        .scores(y)
        .map_err(|_| LossError::LengthMismatch(params.len(), y.len()))?;
    let q = conformal::calibrate(&scores, alpha)?;
    if x.n_rows() < 2 * min_leaf || max_leaves < 2 {
        return Ok(vec![0; x.n_rows()]);
    }
    let intervals = conformal::intervals(&params, &q);
    let covered = CoverageIndicators::from_intervals(&intervals, y);
    let tree = fit_contrast_tree(x, &covered, alpha, max_leaves, min_leaf)?;
    Ok(assign_leaves(&tree, x)?)
}

impl BoostObjective for CondcovObjective {
    fn make_grad_fn<'a>(
        &'a self,
        x: &'a FeatureMatrix,
        y: &'a [f64],
        cfg: &BoostConfig,
    ) -> Box<dyn FnMut(&[f64], &[f64]) -> Result<LossGrad, LossError> + 'a> {
        let alpha = cfg.alpha;
        let sp = SmoothingParams { tau1: cfg.tau1, tau2: cfg.tau2 };
        let max_leaves = cfg.max_leaves;
        let min_leaf = cfg.resolved_min_leaf(y.len());
        let mut round = 0usize;
        let mut labels: Vec<usize> = Vec::new();
        let mut hd = None;
        Box::new(move |mu: &[f64], log_sigma: &[f64]| {
            if round % 10 == 0 {
                labels = current_partition(x, y, mu, log_sigma, alpha, max_leaves, min_leaf)?;
            }
            round += 1;
            let hd = match &hd {
                Some(w) => w,
                None => hd.insert(hd_weights(y.len(), alpha)?),
            };
            let grad = losses::smooth_condcov_grad_with_weights(
                mu, log_sigma, y, alpha, &labels, &sp, hd,
            )?;
            Ok(sum_scaled(grad))
        })
    }

    fn eval_hard(
        &self,
        x: &FeatureMatrix,
        y: &[f64],
        mu: &[f64],
        log_sigma: &[f64],
        cfg: &BoostConfig,
    ) -> Result<f64, PipelineError> {
        let params = ScoreParams::Local { mu, log_sigma };
        let min_leaf = cfg.resolved_min_leaf(y.len());
        if y.len() < 2 * min_leaf || cfg.max_leaves < 2 {
            // Fold too small for tree fitting: fall back to the marginal
            // deviation (a single root group).
            let scores = params.scores(y)?;
            let q = conformal::calibrate(&scores, cfg.alpha)?;
            let covered = scores.iter().filter(|&&e| e <= q.value).count();
            return Ok((covered as f64 / y.len() as f64 - (1.0 - cfg.alpha)).abs());
        }
        Ok(losses::hard_condcov_loss(x, &params, y, cfg.alpha, cfg.max_leaves, min_leaf)?)
    }
}

pub fn objective_for(objective: Objective) -> Box<dyn BoostObjective> {
    match objective {
        Objective::Length => Box::new(LengthObjective),
        Objective::Condcov => Box::new(CondcovObjective),
    }
}

/// Outcome of cross-validated round selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    /// τ: the round minimizing the summed fold losses (smallest on ties).
    pub selected_rounds: usize,
    /// Row j holds fold j's hard loss at rounds 0..=T.
    pub cv_curve: Vec<Vec<f64>>,
    /// Whether any fold was too small for the contrast tree and fell back
    /// to the marginal deviation.
    pub tree_adjusted: bool,
}

/// Select the boosting round count by k-fold cross-validation on the
/// training rows: boost on k-1 folds, evaluate the hard loss on the held-out
/// fold at every round (self-calibrating there), and take the argmin of the
/// summed curves.
pub fn select_rounds_cv(
    x: &FeatureMatrix,
    y: &[f64],
    init_mu: &[f64],
    init_log_sigma: &[f64],
    objective: &dyn BoostObjective,
    cfg: &BoostConfig,
) -> Result<CvSelection, PipelineError> {
    let n = x.n_rows();
    let idx: Vec<usize> = (0..n).collect();
    let folds = data::kfold(&idx, cfg.k, derive_seed(cfg.seed, STREAM_KFOLD))?;

    let fold_results: Vec<Result<Vec<f64>, PipelineError>> = (0..cfg.k)
        .into_par_iter()
        .map(|j| {
            let cal_rows = folds.fold_positions(j);
            let train_rows: Vec<usize> = (0..n).filter(|i| folds.fold_of[*i] != j).collect();

            let x_tr = x.select_rows(&train_rows);
            let y_tr: Vec<f64> = train_rows.iter().map(|&i| y[i]).collect();
            let mu_tr: Vec<f64> = train_rows.iter().map(|&i| init_mu[i]).collect();
            let ls_tr: Vec<f64> = train_rows.iter().map(|&i| init_log_sigma[i]).collect();

            let mut grad_fn = objective.make_grad_fn(&x_tr, &y_tr, cfg);
            let trajectory = gbm::boost_trajectory(
                &x_tr,
                &mu_tr,
                &ls_tr,
                grad_fn.as_mut(),
                cfg.rounds,
                cfg.learning_rate,
            )?;

            let x_cal = x.select_rows(&cal_rows);
            let y_cal: Vec<f64> = cal_rows.iter().map(|&i| y[i]).collect();
            let mut mu_cal: Vec<f64> = cal_rows.iter().map(|&i| init_mu[i]).collect();
            let mut ls_cal: Vec<f64> = cal_rows.iter().map(|&i| init_log_sigma[i]).collect();

            let mut curve = Vec::with_capacity(cfg.rounds + 1);
            curve.push(objective.eval_hard(&x_cal, &y_cal, &mu_cal, &ls_cal, cfg)?);
            for t in 1..=trajectory.n_rounds() {
                trajectory.apply_round(t, &x_cal, &mut mu_cal, &mut ls_cal);
                curve.push(objective.eval_hard(&x_cal, &y_cal, &mu_cal, &ls_cal, cfg)?);
            }
            Ok(curve)
        })
        .collect();

    let mut cv_curve = Vec::with_capacity(cfg.k);
    let mut tree_adjusted = false;
    let min_leaf_full = cfg.resolved_min_leaf(n / cfg.k);
    for (j, result) in fold_results.into_iter().enumerate() {
        let curve = result?;
        let fold_size = folds.fold_positions(j).len();
        if cfg.objective == Objective::Condcov && fold_size < 2 * min_leaf_full {
            tree_adjusted = true;
        }
        cv_curve.push(curve);
    }

    let mut selected_rounds = 0usize;
    let mut best = f64::INFINITY;
    for t in 0..=cfg.rounds {
        let total: f64 = cv_curve.iter().map(|row| row[t]).sum();
        if total < best {
            best = total;
            selected_rounds = t;
        }
    }
    Ok(CvSelection { selected_rounds, cv_curve, tree_adjusted })
}

/// Everything produced before calibration. Construction reads only the
/// training rows of the split; the calibration rows stay untouched until
/// [`calibrate_ensemble`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedBoost {
    pub family: Family,
    /// The boosted score in location/scale parameterization.
    pub ensemble: Ensemble,
    /// The unboosted baseline (the same base offsets with zero rounds).
    pub baseline: Ensemble,
    pub selected_rounds: usize,
    pub cv_curve: Vec<Vec<f64>>,
    pub cv_tree_adjusted: bool,
    pub split: SplitIndices,
}

/// Everything the boosted conformal procedure produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostOutcome {
    pub fitted: FittedBoost,
    pub boosted_quantile: CalibratedQuantile,
    pub baseline_quantile: CalibratedQuantile,
}

/// Split, fit baselines, select rounds by CV, and boost — touching only the
/// training side of the split.
pub fn fit_boosted_score(ds: &Dataset, cfg: &BoostConfig) -> Result<FittedBoost, PipelineError> {
    cfg.validate()?;
    let split = data::split(ds.n_rows(), cfg.gamma, derive_seed(cfg.seed, STREAM_SPLIT))?;
    let train = ds.select_rows(&split.train);

    let (base_mu, base_log_sigma) = if cfg.direct_init {
        (BaseFn::Constant(0.0), BaseFn::Constant(0.0))
    } else {
        match cfg.family {
            Family::Local => fit_baseline_local(&train, cfg)?.base_fns(),
            Family::Cqr => fit_baseline_cqr(&train, cfg.alpha, cfg)?.base_fns(),
        }
    };
    let init_mu = base_mu.eval(&train.features);
    let init_log_sigma = base_log_sigma.eval(&train.features);

    let objective = objective_for(cfg.objective);
    let selection = select_rounds_cv(
        &train.features,
        &train.response,
        &init_mu,
        &init_log_sigma,
        objective.as_ref(),
        cfg,
    )?;

    let mut grad_fn = objective.make_grad_fn(&train.features, &train.response, cfg);
    let trajectory = gbm::boost_trajectory(
        &train.features,
        &init_mu,
        &init_log_sigma,
        grad_fn.as_mut(),
        selection.selected_rounds,
        cfg.learning_rate,
    )?;

    let ensemble = Ensemble::from_trajectory(
        base_mu.clone(),
        base_log_sigma.clone(),
        &trajectory,
        selection.selected_rounds,
        ds.n_cols(),
    );
    let baseline = Ensemble::from_trajectory(base_mu, base_log_sigma, &trajectory, 0, ds.n_cols());
    Ok(FittedBoost {
        family: cfg.family,
        ensemble,
        baseline,
        selected_rounds: selection.selected_rounds,
        cv_curve: selection.cv_curve,
        cv_tree_adjusted: selection.tree_adjusted,
        split,
    })
}

/// Calibration step: evaluate an ensemble's scores on the given rows and
/// take the corrected empirical quantile.
pub fn calibrate_ensemble(
    ds: &Dataset,
    ensemble: &Ensemble,
    rows: &[usize],
    alpha: f64,
) -> Result<CalibratedQuantile, PipelineError> {
    let x = ds.features.select_rows(rows);
    let y: Vec<f64> = rows.iter().map(|&i| ds.response[i]).collect();
    let (mu, log_sigma) = ensemble.predict(&x)?;
    let params = ScoreParams::Local { mu: &mu, log_sigma: &log_sigma };
    let scores = params.scores(&y)?;
    Ok(conformal::calibrate(&scores, alpha)?)
}

/// The full boosted conformal procedure: fit on the training side, then
/// calibrate both the boosted and the baseline score on the calibration side.
pub fn boosted_conformal(ds: &Dataset, cfg: &BoostConfig) -> Result<BoostOutcome, PipelineError> {
    let fitted = fit_boosted_score(ds, cfg)?;
    let boosted_quantile = calibrate_ensemble(ds, &fitted.ensemble, &fitted.split.calib, cfg.alpha)?;
    let baseline_quantile =
        calibrate_ensemble(ds, &fitted.baseline, &fitted.split.calib, cfg.alpha)?;
    Ok(BoostOutcome { fitted, boosted_quantile, baseline_quantile })
}
