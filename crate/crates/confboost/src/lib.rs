//! Post-training refinement of conformity scores by gradient boosting,
//! wrapped in split-conformal calibration.
//!
//! The library builds prediction intervals in three stages: fit baseline
//! score components on a training split, boost those components for a
//! task-specific objective (shorter intervals or better conditional
//! coverage) with the number of rounds chosen by cross-validation, then
//! calibrate on a disjoint split so the finite-sample marginal coverage
//! guarantee is untouched.
//!
//! See the `examples/` directory for runnable end-to-end walkthroughs of
//! each capability, or the `confboost` binary for a batch CLI.

pub mod cli;
pub mod conformal;
pub mod contrast_tree;
pub mod data;
pub mod eval_report;
pub mod gbm;
pub mod losses;
pub mod pipeline;
pub mod scores;
pub mod smooth_quantile;

pub use conformal::{CalibratedQuantile, Interval};
pub use data::{Dataset, FeatureMatrix, FoldAssignment, SplitIndices};
pub use eval_report::EvalReport;
pub use gbm::{BaseFn, Ensemble, GbmModel, Stump, Trajectory};
pub use losses::{LossGrad, SmoothingParams};
pub use pipeline::{BoostConfig, BoostOutcome, Family, FittedBoost, Objective};
pub use scores::{CqrScoreEval, LocalScoreEval, ScoreParams};
