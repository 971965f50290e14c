//! Test-set evaluation and report assembly.
//!
//! A report carries the marginal coverage, the average interval length, and
//! the maximum within-leaf coverage deviation of a contrast tree fit on the
//! test coverage indicators, together with per-leaf diagnostics (size
//! fraction and miscoverage, sorted worst first).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::{self, CalibratedQuantile, Interval};
use crate::contrast_tree::{fit_contrast_tree, CoverageIndicators, TreeError};
use crate::data::{Dataset, FeatureMatrix};
use crate::gbm::{Ensemble, GbmError};
use crate::losses::{self, LossError};
use crate::pipeline::BoostConfig;
use crate::scores::{ScoreError, ScoreParams};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("intervals and responses have mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty test set")]
    EmptyTest,
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Gbm(#[from] GbmError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One contrast-tree leaf of the evaluation: the fraction of test rows it
/// holds and its empirical miscoverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafRow {
    pub size_fraction: f64,
    pub miscoverage: f64,
}

/// Evaluation of one set of intervals on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub marginal_coverage: f64,
    /// Average interval length.
    pub avg_length: f64,
    /// Maximum within-leaf coverage deviation.
    pub max_cond_deviation: f64,
    /// Leaves sorted by miscoverage, worst first; size fractions sum to 1.
    pub leaf_table: Vec<LeafRow>,
    pub config: BoostConfig,
    pub seed: u64,
    /// (boosted - baseline) / baseline on the objective metric; negative is
    /// better. Absent on baseline reports.
    pub improvement_vs_baseline: Option<f64>,
}

/// Fraction of responses inside their (closed) interval.
pub fn marginal_coverage(intervals: &[Interval], y: &[f64]) -> Result<f64, EvalError> {
    if intervals.len() != y.len() {
        return Err(EvalError::LengthMismatch(intervals.len(), y.len()));
    }
    if y.is_empty() {
        return Err(EvalError::EmptyTest);
    }
    let hits = intervals.iter().zip(y).filter(|(iv, yi)| iv.contains(**yi)).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Evaluate a fitted score on held-out data with a frozen calibrated
/// quantile. Errors if any interval is infinite (the length is undefined).
pub fn evaluate(
    test: &Dataset,
    ensemble: &Ensemble,
    quantile: &CalibratedQuantile,
    cfg: &BoostConfig,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if test.n_rows() == 0 {
        return Err(EvalError::EmptyTest);
    }
    let (mu, log_sigma) = ensemble.predict(&test.features)?;
    let params = ScoreParams::Local { mu: &mu, log_sigma: &log_sigma };
    let intervals = conformal::intervals(&params, quantile);
    evaluate_intervals(test, &intervals, cfg, seed)
}

/// As [`evaluate`] for externally supplied intervals (the audit path).
pub fn evaluate_intervals(
    test: &Dataset,
    intervals: &[Interval],
    cfg: &BoostConfig,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let y = &test.response;
    let coverage = marginal_coverage(intervals, y)?;
    let avg_length = losses::length_loss(intervals)?;

    let covered = CoverageIndicators::from_intervals(intervals, y);
    let n = test.n_rows();
    let min_leaf = cfg.resolved_min_leaf(n);
    let (max_cond_deviation, mut leaf_table) = if n >= 2 * min_leaf && cfg.max_leaves >= 2 {
        let tree = fit_contrast_tree(&test.features, &covered, cfg.alpha, cfg.max_leaves, min_leaf)?;
        let rows = tree
            .leaves()
            .iter()
            .map(|leaf| {
                let hits = leaf.indices.iter().filter(|&&i| covered.0[i]).count();
                LeafRow {
                    size_fraction: leaf.indices.len() as f64 / n as f64,
                    miscoverage: 1.0 - hits as f64 / leaf.indices.len() as f64,
                }
            })
            .collect();
        (tree.fit_max_deviation(), rows)
    } else {
        // Too small for a tree: the root is the only group.
        let dev = (coverage - (1.0 - cfg.alpha)).abs();
        (dev, vec![LeafRow { size_fraction: 1.0, miscoverage: 1.0 - coverage }])
    };
    leaf_table.sort_by(|a, b| b.miscoverage.partial_cmp(&a.miscoverage).unwrap());

    Ok(EvalReport {
        marginal_coverage: coverage,
        avg_length,
        max_cond_deviation,
        leaf_table,
        config: cfg.clone(),
        seed,
        improvement_vs_baseline: None,
    })
}

/// One leaf of the regression-tree length comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafLengthComparison {
    pub leaf: usize,
    /// Fraction of the test rows routed to this leaf.
    pub size_fraction: f64,
    pub mean_length_a: f64,
    pub mean_length_b: f64,
    /// ln(mean_a / mean_b); positive means B is shorter in this leaf.
    pub log_ratio: f64,
}

#[derive(Debug, Clone)]
enum RegNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { id: usize },
}

/// A small squared-error regression tree grown best-first to at most
/// `max_leaves` leaves; used only to stratify the test set by predicted
/// response level.
struct RegressionTree {
    nodes: Vec<RegNode>,
    n_leaves: usize,
}

impl RegressionTree {
    fn fit(x: &FeatureMatrix, y: &[f64], max_leaves: usize) -> RegressionTree {
        struct LeafState {
            node: usize,
            rows: Vec<usize>,
        }
        let mut nodes = vec![RegNode::Leaf { id: 0 }];
        let mut leaves = vec![LeafState { node: 0, rows: (0..y.len()).collect() }];

        while leaves.len() < max_leaves {
            // Best SSE-reduction split over all leaves.
            let mut best: Option<(usize, usize, f64, f64)> = None; // (leaf, feature, threshold, gain)
            for (leaf_pos, leaf) in leaves.iter().enumerate() {
                if leaf.rows.len() < 2 {
                    continue;
                }
                let total: f64 = leaf.rows.iter().map(|&i| y[i]).sum();
                let n = leaf.rows.len() as f64;
                let base_score = total * total / n;
                for feature in 0..x.n_cols() {
                    let mut pairs: Vec<(f64, f64)> =
                        leaf.rows.iter().map(|&i| (x.get(i, feature), y[i])).collect();
                    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                    let cuts = distinct_quantile_cuts(&values, 64);
                    let mut ptr = 0usize;
                    let mut left_sum = 0.0;
                    for &cut in &cuts {
                        while ptr < pairs.len() && pairs[ptr].0 <= cut {
                            left_sum += pairs[ptr].1;
                            ptr += 1;
                        }
                        if ptr == 0 || ptr == pairs.len() {
                            continue;
                        }
                        let right_sum = total - left_sum;
                        let gain = left_sum * left_sum / ptr as f64
                            + right_sum * right_sum / (pairs.len() - ptr) as f64
                            - base_score;
                        if gain > 1e-12 && best.map_or(true, |b| gain > b.3) {
                            best = Some((leaf_pos, feature, cut, gain));
                        }
                    }
                }
            }
            let Some((leaf_pos, feature, threshold, _)) = best else { break };

            let rows = std::mem::take(&mut leaves[leaf_pos].rows);
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.into_iter().partition(|&i| x.get(i, feature) <= threshold);
            let left_node = nodes.len();
            let right_node = nodes.len() + 1;
            nodes.push(RegNode::Leaf { id: 0 });
            nodes.push(RegNode::Leaf { id: 0 });
            let parent = leaves[leaf_pos].node;
            nodes[parent] = RegNode::Split { feature, threshold, left: left_node, right: right_node };
            leaves[leaf_pos] = LeafState { node: left_node, rows: left_rows };
            leaves.push(LeafState { node: right_node, rows: right_rows });
        }

        // Stamp final leaf ids in creation order.
        for (id, leaf) in leaves.iter().enumerate() {
            nodes[leaf.node] = RegNode::Leaf { id };
        }
        RegressionTree { nodes, n_leaves: leaves.len() }
    }

    fn route(&self, row: &[f64]) -> usize {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                RegNode::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
                RegNode::Leaf { id } => return id,
            }
        }
    }
}

fn distinct_quantile_cuts(sorted_values: &[f64], max_cuts: usize) -> Vec<f64> {
    let n = sorted_values.len();
    if n < 2 {
        return Vec::new();
    }
    let max_value = sorted_values[n - 1];
    let mut cuts = Vec::new();
    if n <= max_cuts + 1 {
        for &v in sorted_values {
            if v < max_value && cuts.last() != Some(&v) {
                cuts.push(v);
            }
        }
    } else {
        for k in 1..=max_cuts {
            let v = sorted_values[(k * n / (max_cuts + 1)).min(n - 1)];
            if v < max_value && cuts.last() != Some(&v) {
                cuts.push(v);
            }
        }
    }
    cuts
}

/// Stratify the test set by a small regression tree fit on the training
/// responses, then compare the mean interval length of two methods within
/// each leaf. Leaves receiving no test rows are dropped.
pub fn regression_tree_leaf_comparison(
    train: &Dataset,
    test: &Dataset,
    intervals_a: &[Interval],
    intervals_b: &[Interval],
    max_leaves: usize,
) -> Result<Vec<LeafLengthComparison>, EvalError> {
    if intervals_a.len() != test.n_rows() || intervals_b.len() != test.n_rows() {
        return Err(EvalError::LengthMismatch(intervals_a.len(), test.n_rows()));
    }
    for (index, iv) in intervals_a.iter().chain(intervals_b).enumerate() {
        if !iv.width().is_finite() {
            return Err(EvalError::Loss(LossError::InfiniteInterval {
                index: index % test.n_rows(),
            }));
        }
    }
    let tree = RegressionTree::fit(&train.features, &train.response, max_leaves);
    let mut sums_a = vec![0.0; tree.n_leaves];
    let mut sums_b = vec![0.0; tree.n_leaves];
    let mut counts = vec![0usize; tree.n_leaves];
    for i in 0..test.n_rows() {
        let leaf = tree.route(test.features.row(i));
        sums_a[leaf] += intervals_a[i].width();
        sums_b[leaf] += intervals_b[i].width();
        counts[leaf] += 1;
    }
    let n_test = test.n_rows() as f64;
    Ok((0..tree.n_leaves)
        .filter(|&leaf| counts[leaf] > 0)
        .map(|leaf| {
            let mean_a = sums_a[leaf] / counts[leaf] as f64;
            let mean_b = sums_b[leaf] / counts[leaf] as f64;
            LeafLengthComparison {
                leaf,
                size_fraction: counts[leaf] as f64 / n_test,
                mean_length_a: mean_a,
                mean_length_b: mean_b,
                log_ratio: (mean_a / mean_b).ln(),
            }
        })
        .collect())
}

/// Write a cross-validation loss matrix as CSV: one row per round with the
/// per-fold losses and their sum.
pub fn write_cv_curve_csv(cv_curve: &[Vec<f64>], path: impl AsRef<Path>) -> Result<(), EvalError> {
    let path = path.as_ref();
    let mut out = String::from("round");
    for j in 0..cv_curve.len() {
        let _ = write!(out, ",fold_{j}");
    }
    out.push_str(",total\n");
    let rounds = cv_curve.first().map_or(0, Vec::len);
    for t in 0..rounds {
        let _ = write!(out, "{t}");
        let mut total = 0.0;
        for row in cv_curve {
            let _ = write!(out, ",{}", row[t]);
            total += row[t];
        }
        let _ = writeln!(out, ",{total}");
    }
    std::fs::write(path, out).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write a leaf table as CSV (size fraction, miscoverage).
pub fn write_leaf_table_csv(leaf_table: &[LeafRow], path: impl AsRef<Path>) -> Result<(), EvalError> {
    let path = path.as_ref();
    let mut out = String::from("size_fraction,miscoverage\n");
    for row in leaf_table {
        let _ = writeln!(out, "{},{}", row.size_fraction, row.miscoverage);
    }
    std::fs::write(path, out).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}
